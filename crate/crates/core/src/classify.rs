//! P2V conflict typing, jaywalk flags and movement histograms.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{ConflictEvent, ConflictKind, P2vType};
use crate::intersection::IntersectionConfig;
use crate::model::{CrosswalkRole, Leg, MovementCode, ObjectClass, ObjectId, Phase, Trajectory, Turn};

/// Conflict type for a vehicle turn against a pedestrian in a crosswalk of
/// the given role. `curb_turn` is the turn that does not cross opposing
/// traffic (right under right-hand traffic).
///
/// | turn  | role              | type |
/// |-------|-------------------|------|
/// | curb  | adjacent parallel | 1    |
/// | curb  | near              | 2    |
/// | cross | parallel opposite | 3    |
/// | cross | adjacent parallel | 4    |
/// | T     | far               | 5    |
/// | T     | near              | 6    |
pub fn p2v_type(turn: Turn, role: CrosswalkRole, curb_turn: Turn) -> Option<P2vType> {
    use CrosswalkRole::*;
    let n = match (turn, role) {
        (Turn::T, Far) => 5,
        (Turn::T, Near) => 6,
        (Turn::T, _) => return None,
        (t, AdjacentParallel) if t == curb_turn => 1,
        (t, Near) if t == curb_turn => 2,
        (t, _) if t == curb_turn => return None,
        (_, ParallelOpposite) => 3,
        (_, AdjacentParallel) => 4,
        _ => return None,
    };
    P2vType::new(n)
}

/// Role of the pedestrian's crosswalk and the resulting type.
pub fn classify_p2v_type(mv: MovementCode, ped_leg: Leg, cfg: &IntersectionConfig) -> (CrosswalkRole, Option<P2vType>) {
    let role = cfg.crosswalk_role(mv, ped_leg);
    (role, p2v_type(mv.turn, role, cfg.curb_turn()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalState {
    Walk,
    DontWalk,
    Green,
    Yellow,
    Red,
}

impl SignalState {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalState::Walk => "walk",
            SignalState::DontWalk => "dont_walk",
            SignalState::Green => "green",
            SignalState::Yellow => "yellow",
            SignalState::Red => "red",
        }
    }
}

impl core::str::FromStr for SignalState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [SignalState::Walk, SignalState::DontWalk, SignalState::Green, SignalState::Yellow, SignalState::Red]
            .into_iter()
            .find(|st| st.as_str() == s.trim())
            .ok_or_else(|| Error::SignalLog(alloc::format!("unknown signal state {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub phase: Phase,
    pub state: SignalState,
}

/// Controller state intervals; intervals of one phase never overlap.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalLog {
    intervals: Vec<SignalInterval>,
}

impl SignalLog {
    pub fn new(mut intervals: Vec<SignalInterval>) -> Result<Self> {
        for iv in &intervals {
            if !(iv.t_start < iv.t_end) {
                return Err(Error::SignalLog(alloc::format!(
                    "interval [{}, {}) for phase {} is empty or reversed",
                    iv.t_start, iv.t_end, iv.phase
                )));
            }
        }
        intervals.sort_by(|a, b| a.phase.cmp(&b.phase).then_with(|| a.t_start.total_cmp(&b.t_start)));
        for w in intervals.windows(2) {
            if w[0].phase == w[1].phase && w[1].t_start < w[0].t_end {
                return Err(Error::SignalLog(alloc::format!(
                    "overlapping intervals for phase {} at t={}",
                    w[0].phase, w[1].t_start
                )));
            }
        }
        Ok(SignalLog { intervals })
    }

    pub fn intervals(&self) -> &[SignalInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Seconds of `[t0, t1]` during which `phase` shows `state`.
    pub fn overlap(&self, phase: Phase, state: SignalState, t0: f64, t1: f64) -> f64 {
        self.intervals
            .iter()
            .filter(|iv| iv.phase == phase && iv.state == state)
            .map(|iv| (iv.t_end.min(t1) - iv.t_start.max(t0)).max(0.0))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JaywalkMode {
    /// Only the spatial rule (phase 0) applies.
    SignalUnaware,
    SignalAware,
}

impl JaywalkMode {
    pub fn as_str(self) -> &'static str {
        match self {
            JaywalkMode::SignalUnaware => "signal-unaware",
            JaywalkMode::SignalAware => "signal-aware",
        }
    }
}

/// Time span the pedestrian spends in the given crosswalk.
pub fn crossing_interval(ped: &Trajectory, leg: Leg, cfg: &IntersectionConfig) -> Option<(f64, f64)> {
    let poly = cfg.crosswalks.get(&leg)?;
    let mut inside = ped.samples().iter().filter(|s| poly.contains_buffered(s.pos, cfg.crosswalk_buffer));
    let first = inside.next()?.t;
    let last = inside.next_back().map_or(first, |s| s.t);
    Some((first, last))
}

/// Spatial jaywalking (phase 0) or, with a signal log, crossing against
/// don't-walk for more than `t_grace` seconds.
pub fn flag_jaywalk(ped: &Trajectory, cfg: &IntersectionConfig, log: Option<&SignalLog>, t_grace: f64) -> bool {
    let Some(leg) = cfg.pedestrian_crosswalk(ped) else {
        return true;
    };
    let Some(log) = log else { return false };
    let phase = cfg.crosswalk_phase(leg);
    crossing_interval(ped, leg, cfg)
        .is_some_and(|(t0, t1)| log.overlap(phase, SignalState::DontWalk, t0, t1) > t_grace)
}

/// Per-trajectory classification results needed to enrich events.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLabels {
    pub movement: BTreeMap<ObjectId, Option<MovementCode>>,
    pub crosswalk: BTreeMap<ObjectId, Option<Leg>>,
    pub jaywalk: BTreeMap<ObjectId, bool>,
}

impl TrajectoryLabels {
    pub fn build(trajs: &[Trajectory], cfg: &IntersectionConfig, log: Option<&SignalLog>, t_grace: f64) -> Self {
        let mut labels = TrajectoryLabels::default();
        for tr in trajs {
            if tr.class == ObjectClass::Pedestrian {
                labels.crosswalk.insert(tr.object_id.clone(), cfg.pedestrian_crosswalk(tr));
                labels.jaywalk.insert(tr.object_id.clone(), flag_jaywalk(tr, cfg, log, t_grace));
            } else {
                labels.movement.insert(tr.object_id.clone(), cfg.classify_vehicle_movement(tr));
            }
        }
        labels
    }
}

/// Fill movement, crosswalk role, P2V type and jaywalk flag on each event.
pub fn classify_events(events: &mut [ConflictEvent], labels: &TrajectoryLabels, cfg: &IntersectionConfig) {
    for ev in events.iter_mut() {
        ev.movement = ev.vehicle().and_then(|v| labels.movement.get(v).copied().flatten());
        ev.ped_role = None;
        ev.p2v_type = None;
        ev.jaywalk = false;
        if ev.kind != ConflictKind::P2V {
            continue;
        }
        let Some(ped) = ev.pedestrian().cloned() else { continue };
        ev.jaywalk = labels.jaywalk.get(&ped).copied().unwrap_or(false);
        let leg = labels.crosswalk.get(&ped).copied().flatten();
        if let (Some(mv), Some(leg)) = (ev.movement, leg) {
            let (role, ty) = classify_p2v_type(mv, leg, cfg);
            ev.ped_role = Some(role);
            ev.p2v_type = ty;
        }
    }
}

/// Movement label used in histograms and CSV output.
pub fn movement_label(m: Option<MovementCode>) -> String {
    m.map_or_else(|| "unclassifiable".to_string(), |m| m.to_string())
}

/// Events per vehicle movement, most frequent first, ties by label.
pub fn movement_histogram<'a>(events: impl IntoIterator<Item = &'a ConflictEvent>) -> Vec<(Option<MovementCode>, usize)> {
    let mut counts: BTreeMap<Option<MovementCode>, usize> = BTreeMap::new();
    for ev in events {
        *counts.entry(ev.movement).or_default() += 1;
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| movement_label(a.0).cmp(&movement_label(b.0))));
    out
}

/// Histogram over jaywalking P2V events only.
pub fn jaywalk_movement_histogram(events: &[ConflictEvent]) -> Vec<(Option<MovementCode>, usize)> {
    movement_histogram(events.iter().filter(|e| e.kind == ConflictKind::P2V && e.jaywalk))
}

/// P2V events per type, most frequent first; untyped events are excluded.
pub fn type_counts(events: &[ConflictEvent]) -> Vec<(P2vType, usize)> {
    let mut counts: BTreeMap<P2vType, usize> = BTreeMap::new();
    for ev in events.iter().filter(|e| e.kind == ConflictKind::P2V) {
        if let Some(t) = ev.p2v_type {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Metric;
    use crate::geometry::Vec2;
    use crate::intersection::MajorAxis;
    use crate::model::{Bound, Sample};
    use alloc::vec;

    fn cfg() -> IntersectionConfig {
        IntersectionConfig::symmetric(10.0, 3.0, 20.0, MajorAxis::NorthSouth).unwrap()
    }

    #[test]
    fn enumeration_maps_exactly_six_pairs() {
        use CrosswalkRole::*;
        let mut mapped = vec![];
        for turn in Turn::ALL {
            for role in CrosswalkRole::ALL {
                if let Some(t) = p2v_type(turn, role, Turn::R) {
                    mapped.push((turn, role, t.number()));
                }
            }
        }
        mapped.sort_by_key(|m| m.2);
        assert_eq!(
            mapped,
            vec![
                (Turn::R, AdjacentParallel, 1),
                (Turn::R, Near, 2),
                (Turn::L, ParallelOpposite, 3),
                (Turn::L, AdjacentParallel, 4),
                (Turn::T, Far, 5),
                (Turn::T, Near, 6),
            ]
        );
        assert_eq!(p2v_type(Turn::L, Near, Turn::R), None);
    }

    #[test]
    fn movement_examples() {
        let c = cfg();
        // SBR: the adjacent parallel crosswalk is on the west leg.
        let sbr = MovementCode::new(Bound::SB, Turn::R);
        assert_eq!(classify_p2v_type(sbr, Leg::W, &c), (CrosswalkRole::AdjacentParallel, P2vType::new(1)));
        // WBT against the far (west) crosswalk.
        let wbt = MovementCode::new(Bound::WB, Turn::T);
        assert_eq!(classify_p2v_type(wbt, Leg::W, &c).1, P2vType::new(5));
        let nbl = MovementCode::new(Bound::NB, Turn::L);
        assert_eq!(classify_p2v_type(nbl, Leg::S, &c), (CrosswalkRole::Near, None));
    }

    fn ped_on_west(t0: f64) -> Trajectory {
        // West crosswalk: x in [-14, -11], y in [-10, 10].
        let samples = (0..=140).map(|i| Sample::new(t0 + i as f64 * 0.1, -12.5, -10.0 + i as f64 * 0.1 * 1.4)).collect();
        Trajectory::new(ObjectId::from("p"), ObjectClass::Pedestrian, samples).unwrap()
    }

    fn log(walk: (f64, f64)) -> SignalLog {
        let ph = Phase::new(2).unwrap();
        SignalLog::new(vec![
            SignalInterval { t_start: 0.0, t_end: walk.0, phase: ph, state: SignalState::DontWalk },
            SignalInterval { t_start: walk.0, t_end: walk.1, phase: ph, state: SignalState::Walk },
            SignalInterval { t_start: walk.1, t_end: 1000.0, phase: ph, state: SignalState::DontWalk },
        ])
        .unwrap()
    }

    #[test]
    fn jaywalk_rules() {
        let c = cfg();
        assert_eq!(c.crosswalk_phase(Leg::W).number(), 2);
        let median = Trajectory::new(
            ObjectId::from("m"),
            ObjectClass::Pedestrian,
            (0..60).map(|i| Sample::new(i as f64 * 0.1, -20.0 + 0.15 * i as f64, 0.0)).collect(),
        )
        .unwrap();
        assert!(flag_jaywalk(&median, &c, None, 1.0));
        let p = ped_on_west(100.0);
        assert!(!flag_jaywalk(&p, &c, None, 1.0));
        assert!(!flag_jaywalk(&p, &c, Some(&log((90.0, 130.0))), 1.0));
        // Walk ends 5 s before the pedestrian starts.
        let (t0, t1) = crossing_interval(&p, Leg::W, &c).unwrap();
        let l = log((50.0, 95.0));
        assert!((l.overlap(Phase::new(2).unwrap(), SignalState::DontWalk, t0, t1) - (t1 - t0)).abs() < 1e-9);
        assert!(flag_jaywalk(&p, &c, Some(&l), 1.0));
    }

    #[test]
    fn signal_log_validation() {
        let ph = Phase::new(4).unwrap();
        let iv = |a, b| SignalInterval { t_start: a, t_end: b, phase: ph, state: SignalState::Walk };
        assert!(SignalLog::new(vec![iv(0.0, 10.0), iv(5.0, 20.0)]).is_err());
        assert!(SignalLog::new(vec![iv(10.0, 10.0)]).is_err());
        assert!(SignalLog::new(vec![iv(0.0, 10.0), iv(10.0, 20.0)]).is_ok());
        assert!(SignalLog::new(vec![]).unwrap().is_empty());
    }

    fn ev(mv: &str) -> ConflictEvent {
        let mut e = ConflictEvent::new(
            ConflictKind::P2V,
            Metric::Ttc,
            1.0,
            0.0,
            Vec2::ZERO,
            (ObjectId::from("a"), ObjectClass::Car),
            (ObjectId::from("b"), ObjectClass::Pedestrian),
            true,
        );
        e.movement = mv.parse().ok();
        e
    }

    #[test]
    fn histogram_ordering() {
        let evs = [ev("WBT"), ev("SBR"), ev("WBT")];
        let h = movement_histogram(evs.iter());
        assert_eq!(h, vec![(Some("WBT".parse().unwrap()), 2), (Some("SBR".parse().unwrap()), 1)]);
        assert!(movement_histogram(core::iter::empty()).is_empty());
        let tie = [ev("WBT"), ev("EBL")];
        assert_eq!(movement_histogram(tie.iter())[0].0, Some("EBL".parse().unwrap()));
        let with_unknown = [ev("WBT"), ev("??")];
        let total: usize = movement_histogram(with_unknown.iter()).iter().map(|x| x.1).sum();
        assert_eq!(total, 2);
    }
}
