//! Surrogate safety measures and trajectory analytics for a single signalized
//! intersection.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computation:
//! movement and phase classification, time-to-collision and
//! post-encroachment-time conflict detection, P2V conflict typing, and the
//! volume/statistics routines used to compare event days against ordinary
//! days. File formats, network access and the command line live in the `ssm`
//! companion crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod classify;
pub mod error;
pub mod event;
pub mod game;
pub mod geometry;
pub mod intersection;
pub mod kinematics;
pub mod model;
pub mod pet;
pub mod stats;
pub mod ttc;

pub use error::{Error, Result};
pub use event::{ConflictEvent, ConflictKind, Metric};
pub use geometry::{Polygon, Vec2};
pub use intersection::IntersectionConfig;
pub use model::{
    Bound, CrosswalkRole, Leg, MovementCode, ObjectClass, ObjectId, Phase, Sample, TrackPoint,
    Trajectory, Turn,
};

/// Frame period of the upstream video pipeline (10 frames per second).
pub const FRAME_PERIOD: f64 = 0.1;

/// Index of the 0.1 s frame containing `t`.
pub fn frame_index(t: f64) -> i64 {
    libm::round(t / FRAME_PERIOD) as i64
}
