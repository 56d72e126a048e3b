//! Intersection geometry and classification of single trajectories into
//! movements, phases and crosswalk roles.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_distance_deg, Polygon, Vec2};
use crate::model::{Bound, CrosswalkRole, Leg, MovementCode, ObjectClass, Phase, Trajectory, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MajorAxis {
    NorthSouth,
    EastWest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrafficSide {
    #[default]
    Right,
    Left,
}

fn default_cell_size() -> f64 {
    1.0
}
fn default_buffer() -> f64 {
    0.5
}
fn default_fraction() -> f64 {
    0.5
}
fn default_band() -> f64 {
    2.0
}

/// Geometry of the studied intersection plus the phase numbering in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionConfig {
    pub center: Vec2,
    /// Bearing of each leg as seen from `center`; nominal compass bearings
    /// when omitted.
    #[serde(default)]
    pub leg_bearings: BTreeMap<Leg, f64>,
    pub crosswalks: BTreeMap<Leg, Polygon>,
    pub analysis_region: Polygon,
    pub major_axis: MajorAxis,
    #[serde(default = "default_cell_size")]
    pub mesh_cell_size: f64,
    #[serde(default = "default_buffer")]
    pub crosswalk_buffer: f64,
    /// Share of in-region samples that must fall in one crosswalk for a
    /// pedestrian to get that crosswalk's phase.
    #[serde(default = "default_fraction")]
    pub crosswalk_fraction: f64,
    /// Depth of the entry/exit band inside the analysis region boundary.
    #[serde(default = "default_band")]
    pub entry_band: f64,
    #[serde(default)]
    pub traffic_side: TrafficSide,
    /// Through phase per bound; defaults follow `major_axis`.
    #[serde(default)]
    pub through_phases: BTreeMap<Bound, Phase>,
    /// Pedestrian phase per crosswalk leg; defaults follow `major_axis`.
    #[serde(default)]
    pub pedestrian_phases: BTreeMap<Leg, Phase>,
}

/// Resolved movement → phase and crosswalk → phase assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    pub vehicle: Vec<(MovementCode, Phase)>,
    pub pedestrian: Vec<(Leg, Phase)>,
}

fn p(n: u8) -> Phase {
    Phase::new(n).expect("static phase")
}

impl IntersectionConfig {
    /// Default through phases: 2/6 on the major road, 4/8 on the minor road.
    pub fn default_through_phases(axis: MajorAxis) -> BTreeMap<Bound, Phase> {
        let ns = [(Bound::NB, 2), (Bound::SB, 6), (Bound::WB, 4), (Bound::EB, 8)];
        ns.into_iter()
            .map(|(b, n)| {
                let b = match axis {
                    MajorAxis::NorthSouth => b,
                    MajorAxis::EastWest => Bound::from_heading_leg(b.heading_leg().clockwise(1)),
                };
                (b, p(n))
            })
            .collect()
    }

    /// Default pedestrian phases: crosswalks on the minor-road legs carry the
    /// major-road phases 2/6 and vice versa.
    pub fn default_pedestrian_phases(axis: MajorAxis) -> BTreeMap<Leg, Phase> {
        let ns = [(Leg::W, 2), (Leg::E, 6), (Leg::N, 4), (Leg::S, 8)];
        ns.into_iter()
            .map(|(l, n)| {
                let l = match axis {
                    MajorAxis::NorthSouth => l,
                    MajorAxis::EastWest => l.clockwise(1),
                };
                (l, p(n))
            })
            .collect()
    }

    /// Fill defaulted maps and check geometric invariants.
    pub fn validate(mut self) -> Result<Self> {
        let cfg_err = |m: alloc::string::String| Err(Error::Config(m));
        if !(self.mesh_cell_size > 0.0 && self.mesh_cell_size.is_finite()) {
            return cfg_err(format!("mesh_cell_size must be > 0, got {}", self.mesh_cell_size));
        }
        if !(self.crosswalk_buffer >= 0.0) {
            return cfg_err(format!("crosswalk_buffer must be >= 0, got {}", self.crosswalk_buffer));
        }
        if !(self.crosswalk_fraction > 0.0 && self.crosswalk_fraction <= 1.0) {
            return cfg_err(format!("crosswalk_fraction must be in (0, 1], got {}", self.crosswalk_fraction));
        }
        if !(self.entry_band >= 0.0) {
            return cfg_err(format!("entry_band must be >= 0, got {}", self.entry_band));
        }
        if !self.center.is_finite() {
            return cfg_err("center must be finite".into());
        }
        if !self.analysis_region.is_simple() {
            return cfg_err("analysis_region is not a simple non-degenerate polygon".into());
        }
        for leg in Leg::ALL {
            match self.crosswalks.get(&leg) {
                Some(poly) if poly.is_simple() => {}
                Some(_) => return cfg_err(format!("crosswalk {leg} is not a simple non-degenerate polygon")),
                None => return cfg_err(format!("missing crosswalk for leg {leg}")),
            }
            self.leg_bearings.entry(leg).or_insert_with(|| leg.nominal_bearing());
        }
        if self.through_phases.is_empty() {
            self.through_phases = Self::default_through_phases(self.major_axis);
        }
        if self.pedestrian_phases.is_empty() {
            self.pedestrian_phases = Self::default_pedestrian_phases(self.major_axis);
        }
        let mut through: Vec<u8> = Bound::ALL
            .iter()
            .map(|b| self.through_phases.get(b).map_or(0, |p| p.number()))
            .collect();
        through.sort_unstable();
        if through != [2, 4, 6, 8] {
            return cfg_err("through_phases must assign 2, 4, 6, 8 to the four bounds".into());
        }
        let (major, minor) = match self.major_axis {
            MajorAxis::NorthSouth => ([Bound::NB, Bound::SB], [Bound::EB, Bound::WB]),
            MajorAxis::EastWest => ([Bound::EB, Bound::WB], [Bound::NB, Bound::SB]),
        };
        if major.iter().any(|b| ![2, 6].contains(&self.through_phases[b].number()))
            || minor.iter().any(|b| ![4, 8].contains(&self.through_phases[b].number()))
        {
            return cfg_err("phases 2/6 must serve the major road and 4/8 the minor road".into());
        }
        let mut ped: Vec<u8> = Leg::ALL
            .iter()
            .map(|l| self.pedestrian_phases.get(l).map_or(0, |p| p.number()))
            .collect();
        ped.sort_unstable();
        if ped != [2, 4, 6, 8] {
            return cfg_err("pedestrian_phases must assign 2, 4, 6, 8 to the four crosswalks".into());
        }
        Ok(self)
    }

    /// Leg whose bearing is closest to the direction from the center to `p`.
    pub fn leg_of(&self, p: Vec2) -> Leg {
        let bearing = (p - self.center).bearing_deg();
        let mut best = Leg::N;
        let mut best_d = f64::INFINITY;
        for leg in Leg::ALL {
            let b = self.leg_bearings.get(&leg).copied().unwrap_or_else(|| leg.nominal_bearing());
            let d = angular_distance_deg(bearing, b);
            if d < best_d {
                best_d = d;
                best = leg;
            }
        }
        best
    }

    fn curb_side_leg(&self, bound: Bound) -> Leg {
        let heading = bound.heading_leg();
        match self.traffic_side {
            TrafficSide::Right => heading.clockwise(1),
            TrafficSide::Left => heading.clockwise(3),
        }
    }

    /// The turn that does not cross opposing traffic (right turn under
    /// right-hand traffic).
    pub fn curb_turn(&self) -> Turn {
        match self.traffic_side {
            TrafficSide::Right => Turn::R,
            TrafficSide::Left => Turn::L,
        }
    }

    pub fn through_phase(&self, bound: Bound) -> Phase {
        self.through_phases
            .get(&bound)
            .copied()
            .unwrap_or_else(|| Self::default_through_phases(self.major_axis)[&bound])
    }

    pub fn crosswalk_phase(&self, leg: Leg) -> Phase {
        self.pedestrian_phases
            .get(&leg)
            .copied()
            .unwrap_or_else(|| Self::default_pedestrian_phases(self.major_axis)[&leg])
    }

    /// Through and curb-side turns run with the bound's through phase; the
    /// opposing-traffic turn gets the NEMA-paired protected phase.
    pub fn vehicle_phase(&self, mv: MovementCode) -> Phase {
        let through = self.through_phase(mv.bound);
        if mv.turn == Turn::T || mv.turn == self.curb_turn() {
            through
        } else {
            through.paired_left().unwrap_or(through)
        }
    }

    pub fn crosswalk_role(&self, mv: MovementCode, leg: Leg) -> CrosswalkRole {
        let entry = mv.entry_leg();
        if leg == entry {
            CrosswalkRole::Near
        } else if leg == entry.opposite() {
            CrosswalkRole::Far
        } else if leg == self.curb_side_leg(mv.bound) {
            CrosswalkRole::AdjacentParallel
        } else {
            CrosswalkRole::ParallelOpposite
        }
    }

    pub fn phase_table(&self) -> PhaseTable {
        PhaseTable {
            vehicle: MovementCode::all().map(|m| (m, self.vehicle_phase(m))).collect(),
            pedestrian: Leg::ALL.into_iter().map(|l| (l, self.crosswalk_phase(l))).collect(),
        }
    }

    fn entry_point_ok(&self, traj: &Trajectory, idx: usize, neighbour: Option<usize>) -> bool {
        let s = traj.samples();
        let crossed_boundary = neighbour.is_some_and(|j| !self.analysis_region.contains(s[j].pos));
        crossed_boundary || self.analysis_region.boundary_distance(s[idx].pos) <= self.entry_band
    }

    /// Entry and exit legs of a vehicle trajectory, or `None` when the track
    /// starts or ends inside the box (occlusion, clipping) or never enters.
    pub fn entry_exit_legs(&self, traj: &Trajectory) -> Option<(Leg, Leg)> {
        let s = traj.samples();
        let first = s.iter().position(|x| self.analysis_region.contains(x.pos))?;
        let last = s.iter().rposition(|x| self.analysis_region.contains(x.pos))?;
        if first == last {
            return None;
        }
        let before = first.checked_sub(1);
        let after = (last + 1 < s.len()).then_some(last + 1);
        if !self.entry_point_ok(traj, first, before) || !self.entry_point_ok(traj, last, after) {
            return None;
        }
        Some((self.leg_of(s[first].pos), self.leg_of(s[last].pos)))
    }

    /// Movement code of a vehicle trajectory; `None` when unclassifiable.
    pub fn classify_vehicle_movement(&self, traj: &Trajectory) -> Option<MovementCode> {
        if !traj.class.is_vehicle() {
            return None;
        }
        let (entry, exit) = self.entry_exit_legs(traj)?;
        if entry == exit {
            return None;
        }
        let bound = Bound::from_entry_leg(entry);
        let heading = bound.heading_leg();
        let turn = if exit == heading {
            Turn::T
        } else if exit == heading.clockwise(1) {
            Turn::R
        } else {
            Turn::L
        };
        Some(MovementCode::new(bound, turn))
    }

    /// Crosswalk holding at least `crosswalk_fraction` of the pedestrian's
    /// in-region samples.
    pub fn pedestrian_crosswalk(&self, traj: &Trajectory) -> Option<Leg> {
        if traj.class != ObjectClass::Pedestrian {
            return None;
        }
        let inside: Vec<Vec2> = traj
            .samples()
            .iter()
            .map(|s| s.pos)
            .filter(|&p| self.analysis_region.contains(p))
            .collect();
        if inside.is_empty() {
            return None;
        }
        let mut best: Option<(Leg, usize)> = None;
        for (&leg, poly) in &self.crosswalks {
            let n = inside.iter().filter(|&&p| poly.contains_buffered(p, self.crosswalk_buffer)).count();
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((leg, n));
            }
        }
        let (leg, n) = best?;
        (n as f64 >= self.crosswalk_fraction * inside.len() as f64).then_some(leg)
    }

    /// Even phase of the crosswalk the pedestrian used, or phase 0.
    pub fn pedestrian_phase(&self, traj: &Trajectory) -> Phase {
        self.pedestrian_crosswalk(traj).map_or(Phase::ANOMALOUS, |leg| self.crosswalk_phase(leg))
    }

    /// The same intersection rotated clockwise about its center by
    /// `quarter_turns` × 90°, with phase numbering carried along.
    pub fn rotated(&self, quarter_turns: u8) -> IntersectionConfig {
        let c = self.center;
        let rot = |v: Vec2| c + (v - c).rotate_cw(quarter_turns);
        let q = quarter_turns % 4;
        let axis = if q.is_multiple_of(2) {
            self.major_axis
        } else {
            match self.major_axis {
                MajorAxis::NorthSouth => MajorAxis::EastWest,
                MajorAxis::EastWest => MajorAxis::NorthSouth,
            }
        };
        IntersectionConfig {
            center: c,
            leg_bearings: self
                .leg_bearings
                .iter()
                .map(|(&l, &b)| (l.clockwise(q), libm::fmod(b + 90.0 * f64::from(q), 360.0)))
                .collect(),
            crosswalks: self.crosswalks.iter().map(|(&l, poly)| (l.clockwise(q), poly.map(rot))).collect(),
            analysis_region: self.analysis_region.map(rot),
            major_axis: axis,
            through_phases: self
                .through_phases
                .iter()
                .map(|(&b, &ph)| (Bound::from_heading_leg(b.heading_leg().clockwise(q)), ph))
                .collect(),
            pedestrian_phases: self.pedestrian_phases.iter().map(|(&l, &ph)| (l.clockwise(q), ph)).collect(),
            ..self.clone()
        }
    }

    /// Symmetric four-leg intersection centered at the origin: a square box of
    /// half-width `box_half`, crosswalks of width `cw_width` just outside the
    /// box, and a square analysis region of half-width `region_half`.
    pub fn symmetric(box_half: f64, cw_width: f64, region_half: f64, major_axis: MajorAxis) -> Result<Self> {
        let n = Polygon::rect(Vec2::new(-box_half, box_half + 1.0), Vec2::new(box_half, box_half + 1.0 + cw_width));
        let crosswalks = Leg::ALL
            .into_iter()
            .map(|l| (l, n.map(|v| v.rotate_cw(l.index()))))
            .collect();
        IntersectionConfig {
            center: Vec2::ZERO,
            leg_bearings: BTreeMap::new(),
            crosswalks,
            analysis_region: Polygon::rect(Vec2::new(-region_half, -region_half), Vec2::new(region_half, region_half)),
            major_axis,
            mesh_cell_size: default_cell_size(),
            crosswalk_buffer: default_buffer(),
            crosswalk_fraction: default_fraction(),
            entry_band: default_band(),
            traffic_side: TrafficSide::Right,
            through_phases: BTreeMap::new(),
            pedestrian_phases: BTreeMap::new(),
        }
        .validate()
    }
}
