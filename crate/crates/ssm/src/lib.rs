//! File formats, game metadata, synthetic scenarios and the `ssm` command
//! line, on top of the `ssm-core` engines.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod games;
pub mod io;
pub mod output;
pub mod pipeline;
pub mod synth;

pub use error::{AppError, Category, Result};
