//! Domain types shared across the engine.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Pedestrian,
    Car,
    Bus,
    Truck,
    Motorcyclist,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 5] = [
        ObjectClass::Pedestrian,
        ObjectClass::Car,
        ObjectClass::Bus,
        ObjectClass::Truck,
        ObjectClass::Motorcyclist,
    ];

    pub fn is_vehicle(self) -> bool {
        self != ObjectClass::Pedestrian
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Car => "car",
            ObjectClass::Bus => "bus",
            ObjectClass::Truck => "truck",
            ObjectClass::Motorcyclist => "motorcyclist",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObjectClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parameter(alloc::format!("unknown object class {s:?}")))
    }
}

/// Opaque tracker identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        ObjectId(s.to_string())
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One timestamped observation of a tracked object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Seconds since local midnight.
    pub t: f64,
    pub pos: Vec2,
    pub vel: Option<Vec2>,
}

impl Sample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Sample { t, pos: Vec2::new(x, y), vel: None }
    }

    pub fn with_velocity(mut self, vx: f64, vy: f64) -> Self {
        self.vel = Some(Vec2::new(vx, vy));
        self
    }
}

/// A sample together with the identity of the object it belongs to; the unit
/// of a per-frame snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub object_id: ObjectId,
    pub class: ObjectClass,
    pub t: f64,
    pub pos: Vec2,
    pub vel: Option<Vec2>,
}

impl TrackPoint {
    pub fn speed(&self) -> Option<f64> {
        self.vel.map(Vec2::norm)
    }
}

/// Time-ordered samples of one tracked object.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub object_id: ObjectId,
    pub class: ObjectClass,
    samples: Vec<Sample>,
}

impl Trajectory {
    /// Validates that timestamps are non-negative and strictly increasing and
    /// that all coordinates are finite.
    pub fn new(object_id: ObjectId, class: ObjectClass, samples: Vec<Sample>) -> Result<Self> {
        let bad = |reason: &str| Error::Trajectory { id: object_id.0.clone(), reason: reason.to_string() };
        if samples.is_empty() {
            return Err(bad("no samples"));
        }
        for s in &samples {
            if !(s.t >= 0.0 && s.t.is_finite()) {
                return Err(bad("negative or non-finite timestamp"));
            }
            if !s.pos.is_finite() {
                return Err(bad("non-finite coordinate"));
            }
            if let Some(v) = s.vel {
                if !v.is_finite() {
                    return Err(bad("non-finite velocity"));
                }
            }
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(bad("timestamps not strictly increasing"));
        }
        Ok(Trajectory { object_id, class, samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn has_velocities(&self) -> bool {
        self.samples.iter().all(|s| s.vel.is_some())
    }

    /// Timestamp of the middle sample; anchors the trajectory in time bins.
    pub fn mid_time(&self) -> f64 {
        self.samples[(self.samples.len() - 1) / 2].t
    }

    pub fn point(&self, i: usize) -> TrackPoint {
        let s = self.samples[i];
        TrackPoint { object_id: self.object_id.clone(), class: self.class, t: s.t, pos: s.pos, vel: s.vel }
    }

    pub(crate) fn with_samples(&self, samples: Vec<Sample>) -> Trajectory {
        Trajectory { object_id: self.object_id.clone(), class: self.class, samples }
    }
}

/// Intersection approach, named by compass side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Leg {
    N,
    E,
    S,
    W,
}

impl Leg {
    /// Clockwise order starting at north.
    pub const ALL: [Leg; 4] = [Leg::N, Leg::E, Leg::S, Leg::W];

    pub fn index(self) -> u8 {
        match self {
            Leg::N => 0,
            Leg::E => 1,
            Leg::S => 2,
            Leg::W => 3,
        }
    }

    pub fn from_index(i: u8) -> Leg {
        Leg::ALL[(i % 4) as usize]
    }

    /// Leg reached by turning `quarter_turns` × 90° clockwise.
    pub fn clockwise(self, quarter_turns: u8) -> Leg {
        Leg::from_index(self.index() + quarter_turns)
    }

    pub fn opposite(self) -> Leg {
        self.clockwise(2)
    }

    /// Nominal compass bearing of the leg as seen from the center.
    pub fn nominal_bearing(self) -> f64 {
        f64::from(self.index()) * 90.0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Leg::N => "N",
            Leg::E => "E",
            Leg::S => "S",
            Leg::W => "W",
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Leg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Leg::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parameter(alloc::format!("unknown leg {s:?}")))
    }
}

/// Direction of travel through the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bound {
    NB,
    EB,
    SB,
    WB,
}

impl Bound {
    pub const ALL: [Bound; 4] = [Bound::NB, Bound::EB, Bound::SB, Bound::WB];

    /// The leg the traffic is heading towards.
    pub fn heading_leg(self) -> Leg {
        match self {
            Bound::NB => Leg::N,
            Bound::EB => Leg::E,
            Bound::SB => Leg::S,
            Bound::WB => Leg::W,
        }
    }

    /// The leg this traffic enters from.
    pub fn entry_leg(self) -> Leg {
        self.heading_leg().opposite()
    }

    pub fn from_entry_leg(leg: Leg) -> Bound {
        Bound::from_heading_leg(leg.opposite())
    }

    pub fn from_heading_leg(leg: Leg) -> Bound {
        match leg {
            Leg::N => Bound::NB,
            Leg::E => Bound::EB,
            Leg::S => Bound::SB,
            Leg::W => Bound::WB,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Bound::NB => "NB",
            Bound::EB => "EB",
            Bound::SB => "SB",
            Bound::WB => "WB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Turn {
    L,
    T,
    R,
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::L, Turn::T, Turn::R];

    pub fn as_char(self) -> char {
        match self {
            Turn::L => 'L',
            Turn::T => 'T',
            Turn::R => 'R',
        }
    }
}

/// Compass bound plus turn, rendered like `WBT` or `SBR`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MovementCode {
    pub bound: Bound,
    pub turn: Turn,
}

impl MovementCode {
    pub const fn new(bound: Bound, turn: Turn) -> Self {
        MovementCode { bound, turn }
    }

    /// All twelve codes, bound-major.
    pub fn all() -> impl Iterator<Item = MovementCode> {
        Bound::ALL
            .into_iter()
            .flat_map(|b| Turn::ALL.into_iter().map(move |t| MovementCode::new(b, t)))
    }

    pub fn entry_leg(self) -> Leg {
        self.bound.entry_leg()
    }

    /// Leg the movement leaves through.
    pub fn exit_leg(self) -> Leg {
        let heading = self.bound.heading_leg();
        match self.turn {
            Turn::T => heading,
            Turn::R => heading.clockwise(1),
            Turn::L => heading.clockwise(3),
        }
    }
}

impl fmt::Display for MovementCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.bound.as_str(), self.turn.as_char())
    }
}

impl FromStr for MovementCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = || Error::Parameter(alloc::format!("unknown movement code {s:?}"));
        if s.len() != 3 || !s.is_ascii() {
            return Err(err());
        }
        let bound = Bound::ALL.into_iter().find(|b| b.as_str() == &s[..2]).ok_or_else(err)?;
        let turn = Turn::ALL.into_iter().find(|t| s[2..].starts_with(t.as_char())).ok_or_else(err)?;
        Ok(MovementCode::new(bound, turn))
    }
}

impl Serialize for MovementCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MovementCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// NEMA-style phase number 0–8; 0 marks an unclassifiable pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Phase(u8);

impl Phase {
    pub const ANOMALOUS: Phase = Phase(0);
    pub const PEDESTRIAN: [Phase; 5] = [Phase(0), Phase(2), Phase(4), Phase(6), Phase(8)];
    pub const VEHICLE: [Phase; 8] =
        [Phase(1), Phase(2), Phase(3), Phase(4), Phase(5), Phase(6), Phase(7), Phase(8)];

    pub fn new(n: u8) -> Result<Self> {
        if n <= 8 {
            Ok(Phase(n))
        } else {
            Err(Error::Parameter(alloc::format!("phase {n} outside 0..=8")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn is_even_nonzero(self) -> bool {
        self.0 != 0 && self.0.is_multiple_of(2)
    }

    /// NEMA dual-ring pairing: the protected left turn that runs alongside
    /// through phase `self` (2→5, 4→7, 6→1, 8→3).
    pub fn paired_left(self) -> Option<Phase> {
        self.is_even_nonzero().then(|| Phase((self.0 + 2) % 8 + 1))
    }
}

impl TryFrom<u8> for Phase {
    type Error = Error;
    fn try_from(n: u8) -> Result<Self> {
        Phase::new(n)
    }
}

impl From<Phase> for u8 {
    fn from(p: Phase) -> u8 {
        p.0
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Position of a crosswalk relative to a vehicle movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrosswalkRole {
    Near,
    Far,
    AdjacentParallel,
    ParallelOpposite,
}

impl CrosswalkRole {
    pub const ALL: [CrosswalkRole; 4] = [
        CrosswalkRole::Near,
        CrosswalkRole::Far,
        CrosswalkRole::AdjacentParallel,
        CrosswalkRole::ParallelOpposite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CrosswalkRole::Near => "near",
            CrosswalkRole::Far => "far",
            CrosswalkRole::AdjacentParallel => "adjacent_parallel",
            CrosswalkRole::ParallelOpposite => "parallel_opposite",
        }
    }
}

impl fmt::Display for CrosswalkRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CrosswalkRole {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CrosswalkRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s.trim())
            .ok_or_else(|| Error::Parameter(alloc::format!("unknown crosswalk role {s:?}")))
    }
}
