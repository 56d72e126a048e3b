//! Brute-force oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

pub mod pet;
pub mod ttc;
