//! Time-to-collision: pairwise candidate filtering, the three geometric
//! cases (stationary, parallel, crossing) and episode-level event emission.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{sort_events, ConflictEvent, ConflictKind, Metric};
use crate::geometry::Vec2;
use crate::model::{ObjectClass, ObjectId, TrackPoint, Trajectory};
use crate::frame_index;

/// Body length used by the crossing case to decide whether the first road
/// user has fully cleared the conflict point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearanceLengths {
    pub default: f64,
    #[serde(default)]
    pub overrides: BTreeMap<ObjectClass, f64>,
}

impl Default for ClearanceLengths {
    fn default() -> Self {
        let mut overrides = BTreeMap::new();
        overrides.insert(ObjectClass::Pedestrian, 0.5);
        overrides.insert(ObjectClass::Bus, 12.0);
        ClearanceLengths { default: 4.5, overrides }
    }
}

impl ClearanceLengths {
    pub fn of(&self, class: ObjectClass) -> f64 {
        self.overrides.get(&class).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TtcParams {
    /// Maximum separation of a candidate pair (m).
    pub d_max: f64,
    /// Consecutive frames a pair must pass the filter before it counts.
    pub k_min: usize,
    /// Speeds below this are treated as stationary (m/s).
    pub v_stop: f64,
    /// Directions within this angle (or of its supplement) are parallel (deg).
    pub parallel_tolerance_deg: f64,
    /// Lateral miss distance still counted as the same path (m).
    pub lateral_tolerance: f64,
    pub clearance: ClearanceLengths,
    /// Severe when TTC ≤ this (s). Literature range is roughly 1.5–3.0 s.
    pub ttc_severe: f64,
    /// Predicted contacts further out than this are reported as infinite (s).
    pub horizon: f64,
    /// Keep vehicle–vehicle following (parallel case) conflicts.
    pub include_following: bool,
}

impl Default for TtcParams {
    fn default() -> Self {
        TtcParams {
            d_max: 10.0,
            k_min: 3,
            v_stop: 0.2,
            parallel_tolerance_deg: 5.0,
            lateral_tolerance: 1.0,
            clearance: ClearanceLengths::default(),
            ttc_severe: 2.0,
            horizon: 20.0,
            include_following: true,
        }
    }
}

impl TtcParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.d_max > 0.0
            && self.k_min >= 1
            && self.v_stop >= 0.0
            && (0.0..90.0).contains(&self.parallel_tolerance_deg)
            && self.lateral_tolerance >= 0.0
            && self.clearance.default > 0.0
            && self.clearance.overrides.values().all(|&l| l > 0.0)
            && self.ttc_severe >= 0.0
            && self.horizon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter("TTC parameters out of range".into()))
        }
    }
}

/// One participant of a pair at a given instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Party {
    pub id: ObjectId,
    pub class: ObjectClass,
    pub pos: Vec2,
    pub vel: Vec2,
}

impl Party {
    pub fn speed(&self) -> f64 {
        self.vel.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub t: f64,
    pub a: Party,
    pub b: Party,
}

impl PairState {
    /// Inter-object distance.
    pub fn s(&self) -> f64 {
        self.a.pos.distance(self.b.pos)
    }

    pub fn midpoint(&self) -> Vec2 {
        self.a.pos.lerp(self.b.pos, 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TtcCase {
    Stationary = 1,
    Parallel = 2,
    Crossing = 3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcResult {
    /// Seconds, or `f64::INFINITY` when no collision is predicted.
    pub value: f64,
    pub case: TtcCase,
    pub conflict_point: Option<Vec2>,
}

impl TtcResult {
    fn none(case: TtcCase) -> Self {
        TtcResult { value: f64::INFINITY, case, conflict_point: None }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Closest approach of two constant-velocity points, if it lies ahead in
/// time and within the lateral tolerance.
fn closest_approach(pa: Vec2, va: Vec2, pb: Vec2, vb: Vec2, lateral: f64) -> Option<(f64, Vec2)> {
    let d = pb - pa;
    let w = vb - va;
    let w2 = w.norm_sq();
    if w2 == 0.0 {
        return None;
    }
    let t = -d.dot(w) / w2;
    let miss = libm::fabs(d.cross(w)) / libm::sqrt(w2);
    if t <= 0.0 || miss > lateral {
        return None;
    }
    Some((t, pa + va * t))
}

fn within_horizon(mut r: TtcResult, params: &TtcParams) -> TtcResult {
    if r.value > params.horizon {
        r.value = f64::INFINITY;
        r.conflict_point = None;
    }
    r
}

/// At least one party is stationary.
///
/// Both stationary: infinite. Otherwise the mover collides only if the
/// stationary object lies on its ray of motion (within the lateral
/// tolerance); TTC is the distance along that ray divided by the mover's
/// speed.
pub fn ttc_case1(pair: &PairState, params: &TtcParams) -> TtcResult {
    let case = TtcCase::Stationary;
    let (ma, mb) = (pair.a.speed() >= params.v_stop, pair.b.speed() >= params.v_stop);
    let (mover, fixed) = match (ma, mb) {
        (true, false) => (&pair.a, &pair.b),
        (false, true) => (&pair.b, &pair.a),
        _ => return TtcResult::none(case),
    };
    match closest_approach(mover.pos, mover.vel, fixed.pos, Vec2::ZERO, params.lateral_tolerance) {
        Some((t, _)) => within_horizon(TtcResult { value: t, case, conflict_point: Some(fixed.pos) }, params),
        None => TtcResult::none(case),
    }
}

/// Both moving along (near-)parallel lines.
///
/// Collision only when the paths coincide; TTC is the gap divided by the
/// closing speed, measured along the relative motion. Equal velocities or a
/// slower follower give infinity.
pub fn ttc_case2(pair: &PairState, params: &TtcParams) -> TtcResult {
    let case = TtcCase::Parallel;
    match closest_approach(pair.a.pos, pair.a.vel, pair.b.pos, pair.b.vel, params.lateral_tolerance) {
        Some((t, p)) => within_horizon(TtcResult { value: t, case, conflict_point: Some(p) }, params),
        None => TtcResult::none(case),
    }
}

/// Both moving on crossing lines.
///
/// The conflict point is where the lines of motion intersect. Each party
/// occupies it from its arrival until its body length has passed; the TTC is
/// the later arrival (the maximum of the two arrival times) provided the
/// first party has not cleared by then.
pub fn ttc_case3(pair: &PairState, params: &TtcParams) -> TtcResult {
    let case = TtcCase::Crossing;
    let (a, b) = (&pair.a, &pair.b);
    let (sa, sb) = (a.speed(), b.speed());
    let (Some(ua), Some(ub)) = (a.vel.normalized(), b.vel.normalized()) else {
        return TtcResult::none(case);
    };
    let denom = ua.cross(ub);
    if libm::fabs(denom) < 1e-9 {
        return TtcResult::none(case);
    }
    let d = b.pos - a.pos;
    // Signed distances along each direction to the intersection of the lines.
    let da = d.cross(ub) / denom;
    let db = d.cross(ua) / denom;
    let point = a.pos + ua * da;
    let (ta, tb) = (da / sa, db / sb);
    let clear_a = ta + params.clearance.of(a.class) / sa;
    let clear_b = tb + params.clearance.of(b.class) / sb;
    let start = ta.max(tb).max(0.0);
    let end = clear_a.min(clear_b);
    if start > end {
        return TtcResult::none(case);
    }
    within_horizon(TtcResult { value: start, case, conflict_point: Some(point) }, params)
}

/// Which case applies to a pair.
pub fn classify_case(pair: &PairState, params: &TtcParams) -> TtcCase {
    if pair.a.speed() < params.v_stop || pair.b.speed() < params.v_stop {
        return TtcCase::Stationary;
    }
    let ang = crate::geometry::angular_distance_deg(pair.a.vel.bearing_deg(), pair.b.vel.bearing_deg());
    if ang <= params.parallel_tolerance_deg || ang >= 180.0 - params.parallel_tolerance_deg {
        TtcCase::Parallel
    } else {
        TtcCase::Crossing
    }
}

pub fn ttc(pair: &PairState, params: &TtcParams) -> TtcResult {
    match classify_case(pair, params) {
        TtcCase::Stationary => ttc_case1(pair, params),
        TtcCase::Parallel => ttc_case2(pair, params),
        TtcCase::Crossing => ttc_case3(pair, params),
    }
}

fn party(p: &TrackPoint) -> Option<Party> {
    Some(Party { id: p.object_id.clone(), class: p.class, pos: p.pos, vel: p.vel? })
}

/// Pairs of one frame that pass the per-frame filters: not
/// pedestrian–pedestrian, within `d_max`, and on a collision course (finite
/// TTC). Points without velocity are skipped. Pairs come out ordered by id.
pub fn frame_pairs(frame: &[TrackPoint], params: &TtcParams) -> Vec<(PairState, TtcResult)> {
    let mut pts: Vec<&TrackPoint> = frame.iter().filter(|p| p.vel.is_some()).collect();
    pts.sort_by(|a, b| a.pos.x.total_cmp(&b.pos.x).then_with(|| a.object_id.cmp(&b.object_id)));
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if pts[j].pos.x - pts[i].pos.x > params.d_max {
                break;
            }
            let (p, q) = if pts[i].object_id <= pts[j].object_id { (pts[i], pts[j]) } else { (pts[j], pts[i]) };
            let Some(kind) = ConflictKind::of(p.class, q.class) else { continue };
            if p.pos.distance(q.pos) > params.d_max {
                continue;
            }
            let (Some(a), Some(b)) = (party(p), party(q)) else { continue };
            let pair = PairState { t: p.t, a, b };
            let r = ttc(&pair, params);
            if !r.is_finite() {
                continue;
            }
            if r.case == TtcCase::Parallel && kind == ConflictKind::V2V && !params.include_following {
                continue;
            }
            out.push((pair, r));
        }
    }
    out.sort_by(|x, y| (&x.0.a.id, &x.0.b.id).cmp(&(&y.0.a.id, &y.0.b.id)));
    out
}

type PairKey = (ObjectId, ObjectId);

/// Streaming candidate filter: a pair is surfaced once it has passed the
/// per-frame filters on `k_min` consecutive frames.
#[derive(Debug, Default)]
pub struct CandidateFilter {
    streaks: BTreeMap<PairKey, (i64, usize)>,
}

impl CandidateFilter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feed the next frame (frames must arrive in increasing order).
    pub fn observe(&mut self, frame: &[TrackPoint], params: &TtcParams) -> Vec<PairState> {
        let Some(first) = frame.first() else {
            self.streaks.clear();
            return Vec::new();
        };
        let f = frame_index(first.t);
        let mut next = BTreeMap::new();
        let mut out = Vec::new();
        for (pair, _) in frame_pairs(frame, params) {
            let key = (pair.a.id.clone(), pair.b.id.clone());
            let len = match self.streaks.get(&key) {
                Some(&(last, len)) if last == f - 1 => len + 1,
                _ => 1,
            };
            if len >= params.k_min {
                out.push(pair);
            }
            next.insert(key, (f, len));
        }
        self.streaks = next;
        out
    }
}

/// Candidate pairs surfaced across a sequence of frames.
pub fn candidate_pairs(frames: &[Vec<TrackPoint>], params: &TtcParams) -> Vec<PairState> {
    let mut filter = CandidateFilter::new();
    frames.iter().flat_map(|f| filter.observe(f, params)).collect()
}

/// Group samples of all trajectories into 0.1 s frames.
pub fn build_frames(trajs: &[Trajectory]) -> BTreeMap<i64, Vec<TrackPoint>> {
    let mut frames: BTreeMap<i64, Vec<TrackPoint>> = BTreeMap::new();
    for tr in trajs {
        for i in 0..tr.len() {
            let p = tr.point(i);
            frames.entry(frame_index(p.t)).or_default().push(p);
        }
    }
    for pts in frames.values_mut() {
        pts.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    }
    frames
}

struct Episode {
    last: i64,
    len: usize,
    best: (f64, f64, Vec2),
    kind: ConflictKind,
    classes: (ObjectClass, ObjectClass),
}

/// Per-frame TTC over every surviving pair, collapsed to one event per
/// continuous interaction episode at the frame of minimum TTC.
pub fn detect_ttc_conflicts(trajs: &[Trajectory], params: &TtcParams) -> Result<Vec<ConflictEvent>> {
    params.validate()?;
    if let Some(t) = trajs.iter().find(|t| !t.has_velocities()) {
        return Err(Error::MissingVelocity(t.object_id.0.clone()));
    }
    let frames = build_frames(trajs);
    let mut active: BTreeMap<PairKey, Episode> = BTreeMap::new();
    let mut events = Vec::new();
    let close = |key: PairKey, ep: Episode, events: &mut Vec<ConflictEvent>| {
        if ep.len >= params.k_min {
            let (value, t, loc) = ep.best;
            events.push(ConflictEvent::new(
                ep.kind,
                Metric::Ttc,
                value,
                t,
                loc,
                (key.0, ep.classes.0),
                (key.1, ep.classes.1),
                value <= params.ttc_severe,
            ));
        }
    };
    for (&f, pts) in &frames {
        let t = f as f64 * crate::FRAME_PERIOD;
        for (pair, r) in frame_pairs(pts, params) {
            let key = (pair.a.id.clone(), pair.b.id.clone());
            let cand = (r.value, t, pair.midpoint());
            match active.get_mut(&key) {
                Some(ep) if ep.last == f - 1 => {
                    ep.last = f;
                    ep.len += 1;
                    if cand.0 < ep.best.0 {
                        ep.best = cand;
                    }
                }
                _ => {
                    if let Some(old) = active.remove(&key) {
                        close(key.clone(), old, &mut events);
                    }
                    let kind = ConflictKind::of(pair.a.class, pair.b.class).expect("filtered");
                    active.insert(
                        key,
                        Episode { last: f, len: 1, best: cand, kind, classes: (pair.a.class, pair.b.class) },
                    );
                }
            }
        }
        let stale: Vec<PairKey> = active.iter().filter(|(_, ep)| ep.last < f).map(|(k, _)| k.clone()).collect();
        for k in stale {
            let ep = active.remove(&k).expect("present");
            close(k, ep, &mut events);
        }
    }
    for (k, ep) in core::mem::take(&mut active) {
        close(k, ep, &mut events);
    }
    sort_events(&mut events);
    Ok(events)
}
