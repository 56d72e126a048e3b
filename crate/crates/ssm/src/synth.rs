//! Deterministic synthetic scenarios with scripted ground-truth conflicts.
//!
//! Background traffic is Poisson: vehicles are released into the
//! intersection only while their phase is green, pedestrians step off at the
//! start of their walk interval. Around every scripted conflict the
//! background is cleared so the script's participants meet nobody else.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Deserializer, Serialize};
use ssm_core::classify::{classify_p2v_type, SignalInterval, SignalLog, SignalState};
use ssm_core::event::{Metric, P2vType};
use ssm_core::intersection::MajorAxis;
use ssm_core::model::{Bound, Leg, MovementCode, ObjectClass, ObjectId, Phase, Sample, Trajectory, Turn};
use ssm_core::pet::{build_mesh, sweep_cells, MeshGrid};
use ssm_core::{IntersectionConfig, Vec2, FRAME_PERIOD};

use crate::config::Params;
use crate::error::{AppError, Result};

/// The shipped gameday scenario.
pub const GAMEDAY_SCENARIO: &str = include_str!("../scenarios/gameday.json");

const BOX_HALF: f64 = 10.0;
const CROSSWALK_WIDTH: f64 = 3.0;
const REGION_HALF: f64 = 20.0;
const LANE: f64 = 2.5;
const PATH_END: f64 = 22.0;
/// Half-length of a pedestrian crossing path.
const CURB: f64 = 11.5;
const TURN_RADIUS: f64 = 5.0;
const HEADWAY: f64 = 3.0;
/// Distance from the center at which mid-block jaywalkers cross a leg.
const MID_BLOCK: f64 = 17.0;
const CROSSWALK_CENTER: f64 = BOX_HALF + 1.0 + CROSSWALK_WIDTH / 2.0;

// ---------------------------------------------------------------- spec

fn parse_clock(s: &str) -> Option<f64> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return None;
    }
    let mut total = 0.0;
    for (i, p) in parts.iter().enumerate() {
        let v: f64 = p.parse().ok()?;
        total += v * [3600.0, 60.0, 1.0][i];
    }
    Some(total)
}

/// Seconds, given either as a number or as "HH:MM[:SS]".
fn clock<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Clock {
        Seconds(f64),
        Text(String),
    }
    match Clock::deserialize(d)? {
        Clock::Seconds(x) => Ok(x),
        Clock::Text(s) => parse_clock(&s).ok_or_else(|| serde::de::Error::custom(format!("bad time {s:?}, want HH:MM[:SS]"))),
    }
}

fn default_start() -> f64 {
    6.0 * 3600.0
}
fn default_axis() -> MajorAxis {
    MajorAxis::NorthSouth
}
fn default_right_share() -> f64 {
    0.25
}
fn default_anomalous() -> f64 {
    0.03
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn car() -> ObjectClass {
    ObjectClass::Car
}
fn pedestrian() -> ObjectClass {
    ObjectClass::Pedestrian
}
fn walk_speed() -> f64 {
    1.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Surge {
    #[serde(deserialize_with = "clock")]
    pub start: f64,
    #[serde(deserialize_with = "clock")]
    pub end: f64,
    pub multiplier: f64,
    #[serde(default = "yes")]
    pub pedestrians: bool,
    #[serde(default)]
    pub vehicles: bool,
}

/// Fixed-time plan; windows are offsets into the cycle, keyed by the even
/// phase number. Left-turn phases run permissively with their through phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalPlan {
    pub cycle: f64,
    pub walk: BTreeMap<u8, [f64; 2]>,
    pub green: BTreeMap<u8, [f64; 2]>,
}

impl Default for SignalPlan {
    fn default() -> Self {
        SignalPlan {
            cycle: 90.0,
            walk: [(2, [0.0, 20.0]), (6, [0.0, 20.0]), (4, [45.0, 65.0]), (8, [45.0, 65.0])].into(),
            green: [(2, [0.0, 40.0]), (6, [0.0, 40.0]), (4, [45.0, 85.0]), (8, [45.0, 85.0])].into(),
        }
    }
}

impl SignalPlan {
    fn offset(&self, t: f64, origin: f64) -> f64 {
        (t - origin).rem_euclid(self.cycle)
    }

    /// Earliest time ≥ `t` inside `win`.
    fn next_open(&self, t: f64, origin: f64, win: [f64; 2]) -> f64 {
        let c = self.offset(t, origin);
        if c >= win[0] && c < win[1] {
            return t;
        }
        self.next_start(t, origin, win)
    }

    /// Earliest start of `win` at or after `t`.
    fn next_start(&self, t: f64, origin: f64, win: [f64; 2]) -> f64 {
        let k = ((t - origin) / self.cycle).floor();
        let mut cand = origin + k * self.cycle + win[0];
        while cand < t {
            cand += self.cycle;
        }
        cand
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Script {
    /// A vehicle closes on an object standing where its path crosses the
    /// crosswalk, then stops short.
    TtcStationary {
        movement: MovementCode,
        crosswalk: Leg,
        #[serde(default = "car")]
        vehicle: ObjectClass,
        #[serde(default = "pedestrian")]
        obstacle: ObjectClass,
        #[serde(default = "default_stationary_speed")]
        speed: f64,
        ttc: f64,
    },
    /// A faster follower closes on a leader in the same lane, then matches
    /// its speed.
    TtcFollowing {
        movement: MovementCode,
        #[serde(default = "car")]
        leader: ObjectClass,
        #[serde(default = "car")]
        follower: ObjectClass,
        #[serde(default = "default_leader_speed")]
        leader_speed: f64,
        #[serde(default = "default_follower_speed")]
        follower_speed: f64,
        ttc: f64,
    },
    /// A pedestrian steps into the vehicle's path just ahead of it, then
    /// stops and waits for it to pass.
    TtcCrossing {
        movement: MovementCode,
        crosswalk: Leg,
        #[serde(default = "car")]
        vehicle: ObjectClass,
        #[serde(default = "default_crossing_speed")]
        vehicle_speed: f64,
        #[serde(default = "walk_speed")]
        pedestrian_speed: f64,
        #[serde(default)]
        reverse: bool,
        ttc: f64,
    },
    /// A pedestrian clears the shared cell `gap` seconds before the vehicle
    /// enters it.
    Pet {
        movement: MovementCode,
        crosswalk: Leg,
        #[serde(default = "car")]
        vehicle: ObjectClass,
        #[serde(default = "default_turn_speed")]
        vehicle_speed: f64,
        #[serde(default = "walk_speed")]
        pedestrian_speed: f64,
        #[serde(default)]
        reverse: bool,
        gap: f64,
    },
}

fn default_stationary_speed() -> f64 {
    4.0
}
fn default_leader_speed() -> f64 {
    6.0
}
fn default_follower_speed() -> f64 {
    10.0
}
fn default_crossing_speed() -> f64 {
    4.0
}
fn default_turn_speed() -> f64 {
    6.0
}

/// `count` copies of a script, the first with its conflict instant at `at`,
/// then every `every` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptSeries {
    #[serde(flatten)]
    pub script: Script,
    #[serde(deserialize_with = "clock")]
    pub at: f64,
    #[serde(default)]
    pub every: f64,
    #[serde(default = "one")]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub date: NaiveDate,
    #[serde(default)]
    pub gameday: bool,
    #[serde(default = "default_start", deserialize_with = "clock")]
    pub start: f64,
    #[serde(deserialize_with = "clock")]
    pub duration: f64,
    #[serde(default = "default_axis")]
    pub major_axis: MajorAxis,
    /// Pedestrians per hour on the crosswalk served by each phase.
    #[serde(default)]
    pub pedestrian_rates: BTreeMap<u8, f64>,
    /// Vehicles per hour per phase; through phases also carry right turns.
    #[serde(default)]
    pub vehicle_rates: BTreeMap<u8, f64>,
    #[serde(default = "default_right_share")]
    pub right_share: f64,
    /// Share of pedestrians crossing diagonally or mid-block.
    #[serde(default = "default_anomalous")]
    pub anomalous_share: f64,
    #[serde(default)]
    pub surges: Vec<Surge>,
    #[serde(default)]
    pub scripts: Vec<ScriptSeries>,
    #[serde(default)]
    pub signal: SignalPlan,
}

fn infeasible(msg: impl Into<String>) -> AppError {
    AppError::config(format!("infeasible scenario: {}", msg.into()))
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<ScenarioSpec> {
        let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| AppError::config(format!("scenario: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn gameday() -> ScenarioSpec {
        ScenarioSpec::from_json(GAMEDAY_SCENARIO).expect("shipped scenario is valid")
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AppError::config(format!("scenario {:?}: {m}", self.name)));
        if !(self.duration > 0.0 && self.start >= 0.0 && self.end() <= 48.0 * 3600.0) {
            return bad("start must be ≥ 0 and duration > 0".into());
        }
        for (&p, &r) in &self.pedestrian_rates {
            if ![2, 4, 6, 8].contains(&p) {
                return bad(format!("pedestrian phase {p} is not one of 2, 4, 6, 8"));
            }
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("pedestrian rate {r} for phase {p} must be ≥ 0"));
            }
        }
        for (&p, &r) in &self.vehicle_rates {
            if !(1..=8).contains(&p) {
                return bad(format!("vehicle phase {p} outside 1..=8"));
            }
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("vehicle rate {r} for phase {p} must be ≥ 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.right_share) || !(0.0..=1.0).contains(&self.anomalous_share) {
            return bad("shares must be in [0, 1]".into());
        }
        for s in &self.surges {
            if !(s.multiplier >= 1.0 && s.multiplier.is_finite() && s.start < s.end) {
                return bad(format!("surge {}..{} needs start < end and multiplier ≥ 1", s.start, s.end));
            }
        }
        let plan = &self.signal;
        if !(plan.cycle > 0.0) {
            return bad("signal cycle must be > 0".into());
        }
        for p in [2u8, 4, 6, 8] {
            for (what, map) in [("walk", &plan.walk), ("green", &plan.green)] {
                match map.get(&p) {
                    Some(w) if 0.0 <= w[0] && w[0] < w[1] && w[1] <= plan.cycle => {}
                    _ => return bad(format!("signal plan needs a {what} window inside the cycle for phase {p}")),
                }
            }
        }
        for s in &self.scripts {
            if s.count == 0 || (s.count > 1 && !(s.every > 0.0)) {
                return bad("script series need count ≥ 1 and every > 0 when repeated".into());
            }
        }
        Ok(())
    }

    fn multiplier(&self, t: f64, pedestrians: bool) -> f64 {
        self.surges
            .iter()
            .filter(|s| if pedestrians { s.pedestrians } else { s.vehicles })
            .filter(|s| t >= s.start && t < s.end)
            .map(|s| s.multiplier)
            .fold(1.0, f64::max)
    }

    fn max_multiplier(&self, pedestrians: bool) -> f64 {
        self.surges
            .iter()
            .filter(|s| if pedestrians { s.pedestrians } else { s.vehicles })
            .map(|s| s.multiplier)
            .fold(1.0, f64::max)
    }

    /// The intersection every scenario is laid out on.
    pub fn intersection(&self) -> IntersectionConfig {
        IntersectionConfig::symmetric(BOX_HALF, CROSSWALK_WIDTH, REGION_HALF, self.major_axis).expect("static geometry")
    }
}

// ---------------------------------------------------------------- geometry

/// Polyline parameterized by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pts: Vec<Vec2>,
    cum: Vec<f64>,
}

impl Path {
    pub fn new(pts: Vec<Vec2>) -> Path {
        assert!(pts.len() >= 2);
        let mut cum = vec![0.0];
        for w in pts.windows(2) {
            cum.push(cum.last().unwrap() + w[0].distance(w[1]));
        }
        Path { pts, cum }
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn seg(&self, s: f64) -> usize {
        let i = self.cum.partition_point(|&c| c <= s);
        i.saturating_sub(1).min(self.pts.len() - 2)
    }

    pub fn at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let i = self.seg(s);
        let len = self.cum[i + 1] - self.cum[i];
        let u = if len > 0.0 { (s - self.cum[i]) / len } else { 0.0 };
        self.pts[i].lerp(self.pts[i + 1], u)
    }

    fn rotated(&self, q: u8) -> Path {
        Path::new(self.pts.iter().map(|p| p.rotate_cw(q)).collect())
    }

    /// Whether `[s0, s1]` lies on a single straight piece.
    fn straight(&self, s0: f64, s1: f64) -> bool {
        let (a, b) = (s0.max(0.0), s1.min(self.length()));
        if a > b {
            return false;
        }
        let (i, j) = (self.seg(a), self.seg(b));
        i == j || (j == i + 1 && b == self.cum[j])
    }

    /// Arc lengths on both paths of their first crossing.
    pub fn crossing(&self, other: &Path) -> Option<(f64, f64)> {
        for i in 0..self.pts.len() - 1 {
            let (a, b) = (self.pts[i], self.pts[i + 1]);
            for j in 0..other.pts.len() - 1 {
                let (c, d) = (other.pts[j], other.pts[j + 1]);
                let r = b - a;
                let s = d - c;
                let denom = r.cross(s);
                if denom.abs() < 1e-12 {
                    continue;
                }
                let u = (c - a).cross(s) / denom;
                let v = (c - a).cross(r) / denom;
                if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
                    return Some((self.cum[i] + u * r.norm(), other.cum[j] + v * s.norm()));
                }
            }
        }
        None
    }

    /// Arc lengths where the path first enters and then leaves the box.
    fn box_visit(&self, lo: Vec2, hi: Vec2) -> Option<(f64, f64)> {
        let mut visit: Option<(f64, f64)> = None;
        for i in 0..self.pts.len() - 1 {
            let (a, b) = (self.pts[i], self.pts[i + 1]);
            let (mut u0, mut u1) = (0.0f64, 1.0f64);
            for (p, q, l, h) in [(a.x, b.x, lo.x, hi.x), (a.y, b.y, lo.y, hi.y)] {
                let d = q - p;
                if d.abs() < 1e-15 {
                    if p < l || p > h {
                        u0 = 1.0;
                        u1 = 0.0;
                    }
                } else {
                    let (t0, t1) = ((l - p) / d, (h - p) / d);
                    u0 = u0.max(t0.min(t1));
                    u1 = u1.min(t0.max(t1));
                }
            }
            if u0 > u1 {
                if visit.is_some() {
                    break;
                }
                continue;
            }
            let len = self.cum[i + 1] - self.cum[i];
            let (s0, s1) = (self.cum[i] + u0 * len, self.cum[i] + u1 * len);
            visit = match visit {
                None => Some((s0, s1)),
                Some((e, x)) if (s0 - x).abs() < 1e-9 => Some((e, s1)),
                Some(v) => return Some(v),
            };
        }
        visit
    }

    /// Cells of the mesh along the path as (cell, s_enter, s_exit).
    fn cells(&self, mesh: &MeshGrid) -> Vec<(usize, f64, f64)> {
        let step = mesh.cell_size / 20.0;
        let n = (self.length() / step).ceil() as usize;
        let mut out: Vec<(usize, f64, f64)> = Vec::new();
        let mut prev: Option<(usize, f64)> = None;
        for k in 0..=n {
            let s = (k as f64 * step).min(self.length());
            let cell = mesh.cell_of(self.at(s));
            match (prev, cell) {
                (Some((c, _)), Some(c2)) if c == c2 => {}
                _ => {
                    // Locate the boundary between the previous and this sample.
                    let boundary = if k == 0 {
                        0.0
                    } else {
                        let (mut lo, mut hi) = (s - step, s);
                        let before = prev.map(|p| p.0);
                        for _ in 0..50 {
                            let mid = 0.5 * (lo + hi);
                            if mesh.cell_of(self.at(mid)) == before {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        hi
                    };
                    if let Some((c, s0)) = prev {
                        out.push((c, s0, boundary));
                    }
                    prev = cell.map(|c| (c, boundary));
                }
            }
        }
        if let Some((c, s0)) = prev {
            out.push((c, s0, self.length()));
        }
        out
    }
}

fn arc(center: Vec2, r: f64, from_deg: f64, to_deg: f64) -> Vec<Vec2> {
    let steps = 30;
    (1..=steps)
        .map(|k| {
            let a = (from_deg + (to_deg - from_deg) * k as f64 / steps as f64).to_radians();
            center + Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn bound_quarter_turns(b: Bound) -> u8 {
    match b {
        Bound::NB => 0,
        Bound::EB => 1,
        Bound::SB => 2,
        Bound::WB => 3,
    }
}

/// Lane-center path of a movement under right-hand traffic.
pub fn vehicle_path(mv: MovementCode) -> Path {
    let start = Vec2::new(LANE, -PATH_END);
    let mut pts = vec![start];
    match mv.turn {
        Turn::T => pts.push(Vec2::new(LANE, PATH_END)),
        Turn::R => {
            let c = Vec2::new(LANE + TURN_RADIUS, -LANE - TURN_RADIUS);
            pts.push(Vec2::new(LANE, c.y));
            pts.extend(arc(c, TURN_RADIUS, 180.0, 90.0));
            pts.push(Vec2::new(PATH_END, -LANE));
        }
        Turn::L => {
            let c = Vec2::new(-LANE, -LANE);
            pts.push(Vec2::new(LANE, -LANE));
            pts.extend(arc(c, TURN_RADIUS, 0.0, 90.0));
            pts.push(Vec2::new(-PATH_END, LANE));
        }
    }
    Path::new(pts).rotated(bound_quarter_turns(mv.bound))
}

/// Center line of a crosswalk, walked clockwise around the intersection
/// unless `reverse`.
pub fn crosswalk_path(leg: Leg, reverse: bool) -> Path {
    let mut pts = vec![Vec2::new(-CURB, CROSSWALK_CENTER), Vec2::new(CURB, CROSSWALK_CENTER)];
    if reverse {
        pts.reverse();
    }
    Path::new(pts).rotated(leg.index())
}

fn mid_block_path(leg: Leg, reverse: bool) -> Path {
    let mut pts = vec![Vec2::new(-CURB, MID_BLOCK), Vec2::new(CURB, MID_BLOCK)];
    if reverse {
        pts.reverse();
    }
    Path::new(pts).rotated(leg.index())
}

fn diagonal_path(corner: u8) -> Path {
    Path::new(vec![Vec2::new(-CURB, -CURB), Vec2::new(CURB, CURB)]).rotated(corner)
}

// ---------------------------------------------------------------- motion

/// Piecewise-linear arc length over time.
#[derive(Debug, Clone, PartialEq)]
struct Motion {
    keys: Vec<(f64, f64)>,
}

impl Motion {
    fn new(t: f64, s: f64) -> Motion {
        Motion { keys: vec![(t, s)] }
    }

    fn last(&self) -> (f64, f64) {
        *self.keys.last().unwrap()
    }

    fn to(mut self, t: f64, s: f64) -> Motion {
        self.keys.push((t, s));
        self
    }

    fn cruise(self, speed: f64, s: f64) -> Motion {
        let (t0, s0) = self.last();
        self.to(t0 + (s - s0) / speed, s)
    }

    fn start(&self) -> f64 {
        self.keys[0].0
    }

    fn end(&self) -> f64 {
        self.last().0
    }

    fn s_at(&self, t: f64) -> f64 {
        let k = &self.keys;
        if t <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((t0, s0), (t1, s1)) = (w[0], w[1]);
            if t <= t1 {
                return if t1 > t0 { s0 + (s1 - s0) * (t - t0) / (t1 - t0) } else { s1 };
            }
        }
        self.last().1
    }

    /// First time the arc length reaches `s`.
    fn t_at(&self, s: f64) -> f64 {
        let k = &self.keys;
        if s <= k[0].1 {
            return k[0].0;
        }
        for w in k.windows(2) {
            let ((t0, s0), (t1, s1)) = (w[0], w[1]);
            if s <= s1 && s1 > s0 {
                return t0 + (t1 - t0) * (s - s0) / (s1 - s0);
            }
        }
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
struct Track {
    id: String,
    class: ObjectClass,
    path: Path,
    motion: Motion,
}

fn frame(t: f64) -> i64 {
    (t / FRAME_PERIOD).round() as i64
}

fn frame_time(f: i64) -> f64 {
    f as f64 * FRAME_PERIOD
}

impl Track {
    fn sample(&self, window: (i64, i64)) -> Option<Trajectory> {
        let f0 = ((self.motion.start() / FRAME_PERIOD) - 1e-6).ceil() as i64;
        let f1 = ((self.motion.end() / FRAME_PERIOD) + 1e-6).floor() as i64;
        let (f0, f1) = (f0.max(window.0), f1.min(window.1));
        if f1 <= f0 {
            return None;
        }
        let samples = (f0..=f1)
            .map(|f| {
                let t = frame_time(f);
                let p = self.path.at(self.motion.s_at(t));
                Sample::new(t, p.x, p.y)
            })
            .collect();
        Some(Trajectory::new(ObjectId(self.id.clone()), self.class, samples).expect("generated samples are valid"))
    }
}

// ---------------------------------------------------------------- ground truth

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub script: String,
    pub metric: Metric,
    /// TTC case number.
    pub case: Option<u8>,
    pub value: f64,
    pub t: f64,
    pub id_a: ObjectId,
    pub id_b: ObjectId,
    pub movement: MovementCode,
    pub crosswalk: Option<Leg>,
    pub expected_type: Option<P2vType>,
}

pub const TRUTH_HEADER: &str = "script,metric,case,value,t,id_a,id_b,movement,crosswalk,expected_type";

pub fn write_truth<W: Write>(mut w: W, rows: &[TruthRow]) -> std::io::Result<()> {
    writeln!(w, "{TRUTH_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.3},{:.3},{},{},{},{},{}",
            r.script,
            r.metric.as_str(),
            r.case.map(|c| c.to_string()).unwrap_or_default(),
            r.value,
            r.t,
            r.id_a,
            r.id_b,
            r.movement,
            r.crosswalk.map(|l| l.to_string()).unwrap_or_default(),
            r.expected_type.map(|t| t.number().to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub config: IntersectionConfig,
    pub trajectories: Vec<Trajectory>,
    pub signal_log: SignalLog,
    pub truth: Vec<TruthRow>,
}

// ---------------------------------------------------------------- scripts

struct Ctx<'a> {
    cfg: &'a IntersectionConfig,
    params: &'a Params,
    mesh: MeshGrid,
}

struct Scripted {
    tracks: Vec<Track>,
    truth: Vec<TruthRow>,
    /// Cell the PET script is built around.
    pet_cell: Option<usize>,
}

fn pair(a: &str, b: &str) -> (ObjectId, ObjectId) {
    let (a, b) = (ObjectId::from(a), ObjectId::from(b));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn crossing_point(mv: MovementCode, leg: Leg, reverse: bool) -> Result<(Path, Path, f64, f64)> {
    let vp = vehicle_path(mv);
    let cp = crosswalk_path(leg, reverse);
    let (sv, sc) = vp.crossing(&cp).ok_or_else(|| infeasible(format!("{mv} does not cross the {leg} crosswalk")))?;
    Ok((vp, cp, sv, sc))
}

fn build_script(ctx: &Ctx, name: &str, script: &Script, t_star: f64) -> Result<Scripted> {
    let ttc = &ctx.params.ttc;
    let pet_window = ctx.params.pet.pet_window;
    let k = ttc.k_min as f64 * FRAME_PERIOD;
    let after = frame_time(frame(t_star) + 1);
    let id = |suffix: char| format!("{name}{suffix}");
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(infeasible(format!("script {name}: {what}"))) };

    match *script {
        Script::TtcStationary { movement, crosswalk, vehicle, obstacle, speed: v, ttc: tau } => {
            check(vehicle.is_vehicle(), "the moving party must be a vehicle")?;
            check(v > ttc.v_stop && tau >= 0.3 && tau <= ttc.horizon, "need ttc ≥ 0.3 s within the horizon")?;
            let (vp, cp, sv, sc) = crossing_point(movement, crosswalk, false)?;
            let s = v * tau;
            check(s + k * v <= ttc.d_max, "the approach does not fit inside d_max; lower the speed or the ttc")?;
            check(s - 0.1 * v >= ttc.lateral_tolerance + 0.5, "the vehicle would stop too close to the obstacle")?;
            check(vp.straight(sv - s - k * v - 0.1, sv), "the approach is not straight")?;
            let p_star = sv - s;
            check(p_star >= 0.0, "the vehicle path is too short for this ttc")?;
            let t0 = t_star - p_star / v;
            let stop = p_star + 0.1 * v;
            let t_arrive = t0 - pet_window - 2.0;
            let t_leave = t_star + 1.0;
            let t_resume = t_leave + 2.0 / walk_speed() + pet_window + 2.0;
            let mover = Track {
                id: id('v'),
                class: vehicle,
                path: vp.clone(),
                motion: Motion::new(t0, 0.0).to(after, stop).to(t_resume, stop).cruise(v, vp.length()),
            };
            let (other, leg) = if obstacle == ObjectClass::Pedestrian {
                let m = Motion::new(t_arrive - sc / walk_speed(), 0.0)
                    .to(t_arrive, sc)
                    .to(t_leave, sc)
                    .cruise(walk_speed(), cp.length());
                (Track { id: id('p'), class: obstacle, path: cp, motion: m }, Some(crosswalk))
            } else {
                let m = Motion::new(t_arrive - sv / v, 0.0).to(t_arrive, sv).to(t_leave, sv).cruise(v, vp.length());
                (Track { id: id('o'), class: obstacle, path: vp, motion: m }, None)
            };
            let (a, b) = pair(&mover.id, &other.id);
            let truth = TruthRow {
                script: name.into(),
                metric: Metric::Ttc,
                case: Some(1),
                value: tau,
                t: t_star,
                id_a: a,
                id_b: b,
                movement,
                crosswalk: leg,
                expected_type: leg.and_then(|l| classify_p2v_type(movement, l, ctx.cfg).1),
            };
            Ok(Scripted { tracks: vec![mover, other], truth: vec![truth], pet_cell: None })
        }
        Script::TtcFollowing { movement, leader, follower, leader_speed: vl, follower_speed: vf, ttc: tau } => {
            check(leader.is_vehicle() && follower.is_vehicle(), "both parties must be vehicles")?;
            check(vl > ttc.v_stop && vf > vl, "the follower must be faster than a moving leader")?;
            check(tau >= 0.3 && tau <= ttc.horizon, "need ttc ≥ 0.3 s within the horizon")?;
            let dv = vf - vl;
            let g = tau * dv;
            check(g + k * dv <= ttc.d_max, "the closing gap does not fit inside d_max")?;
            let path = vehicle_path(movement);
            let (sl, sf) = (path.length() / 2.0 + g / 2.0, path.length() / 2.0 - g / 2.0);
            check(path.straight(sf - k * vf - 0.2, sl + 0.5 * vl), "the lane is not straight where the conflict happens")?;
            let lead = Track {
                id: id('l'),
                class: leader,
                path: path.clone(),
                motion: Motion::new(t_star - sl / vl, 0.0).cruise(vl, path.length()),
            };
            let follow = Track {
                id: id('f'),
                class: follower,
                path: path.clone(),
                motion: Motion::new(t_star - sf / vf, 0.0).to(after, sf + 0.1 * vf).cruise(vl, path.length()),
            };
            let (a, b) = pair(&lead.id, &follow.id);
            let mut truth = vec![TruthRow {
                script: name.into(),
                metric: Metric::Ttc,
                case: Some(2),
                value: tau,
                t: t_star,
                id_a: a.clone(),
                id_b: b.clone(),
                movement,
                crosswalk: None,
                expected_type: None,
            }];
            // Following in one lane also leaves a post-encroachment record in
            // every shared cell; the smallest one is the expected event.
            let best = path
                .cells(&ctx.mesh)
                .into_iter()
                .map(|(_, s_in, s_out)| {
                    let t_f = follow.motion.t_at(s_in);
                    (t_f - lead.motion.t_at(s_out), t_f)
                })
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
            if let Some((pet, t)) = best.filter(|b| b.0 <= pet_window) {
                truth.push(TruthRow {
                    metric: Metric::Pet,
                    case: None,
                    value: pet.max(0.0),
                    t,
                    ..truth[0].clone()
                });
            }
            Ok(Scripted { tracks: vec![lead, follow], truth, pet_cell: None })
        }
        Script::TtcCrossing { movement, crosswalk, vehicle, vehicle_speed: vv, pedestrian_speed: vp_speed, reverse, ttc: big_t } => {
            check(vehicle.is_vehicle(), "the crossing party must be a vehicle")?;
            check(vv > ttc.v_stop && vp_speed > ttc.v_stop, "speeds must exceed v_stop")?;
            check(big_t >= 0.3 && big_t <= ttc.horizon, "need ttc ≥ 0.3 s within the horizon")?;
            let (path_v, path_p, sv, sc) = crossing_point(movement, crosswalk, reverse)?;
            let delta = 0.8 * ttc.clearance.of(ObjectClass::Pedestrian) / vp_speed;
            let tp = big_t - delta;
            check(2.0 * tp - 0.2 >= big_t, "the pedestrian would reach the path too early to stop")?;
            check((tp - 0.1) * vp_speed >= ttc.lateral_tolerance + 0.2, "the pedestrian would stop too close to the lane")?;
            check(path_v.straight(sv - (big_t + k + 0.1) * vv, sv + 0.1), "the vehicle approach is not straight")?;
            let dir_v = path_v.at(sv + 0.1) - path_v.at(sv - 0.1);
            let dir_p = path_p.at(sc + 0.1) - path_p.at(sc - 0.1);
            let ang = ssm_core::geometry::angular_distance_deg(dir_v.bearing_deg(), dir_p.bearing_deg());
            check(ang > ttc.parallel_tolerance_deg && ang < 180.0 - ttc.parallel_tolerance_deg, "paths are parallel")?;
            let stop = sc - (tp - 0.1) * vp_speed;
            check(sc - (tp + k) * vp_speed >= 0.0, "the crosswalk is too short for this ttc")?;
            check(sv - (big_t + k) * vv >= 0.0, "the vehicle path is too short for this ttc")?;
            let gap = path_v.at(sv - (big_t + k) * vv).distance(path_p.at(sc - (tp + k) * vp_speed));
            check(gap <= ttc.d_max, "the parties are not within d_max before the conflict")?;
            let veh = Track {
                id: id('v'),
                class: vehicle,
                path: path_v.clone(),
                motion: Motion::new(t_star + big_t - sv / vv, 0.0).cruise(vv, path_v.length()),
            };
            let t_resume = t_star + big_t + ttc.clearance.of(vehicle) / vv + pet_window + 2.0;
            let ped = Track {
                id: id('p'),
                class: ObjectClass::Pedestrian,
                path: path_p.clone(),
                motion: Motion::new(t_star + tp - sc / vp_speed, 0.0)
                    .to(after, stop)
                    .to(t_resume, stop)
                    .cruise(vp_speed, path_p.length()),
            };
            let (a, b) = pair(&veh.id, &ped.id);
            let truth = TruthRow {
                script: name.into(),
                metric: Metric::Ttc,
                case: Some(3),
                value: big_t,
                t: t_star,
                id_a: a,
                id_b: b,
                movement,
                crosswalk: Some(crosswalk),
                expected_type: classify_p2v_type(movement, crosswalk, ctx.cfg).1,
            };
            Ok(Scripted { tracks: vec![veh, ped], truth: vec![truth], pet_cell: None })
        }
        Script::Pet { movement, crosswalk, vehicle, vehicle_speed: vv, pedestrian_speed: vp_speed, reverse, gap } => {
            check(vehicle.is_vehicle(), "the following party must be a vehicle")?;
            check(vv > 0.0 && vp_speed > 0.0, "speeds must be > 0")?;
            check(gap > 0.0 && gap <= pet_window, "the gap must be in (0, pet_window]")?;
            let (path_v, path_p, sv, _) = crossing_point(movement, crosswalk, reverse)?;
            let cell = ctx.mesh.cell_of(path_v.at(sv)).ok_or_else(|| infeasible(format!("script {name}: conflict point off the mesh")))?;
            let half = Vec2::new(ctx.mesh.cell_size / 2.0, ctx.mesh.cell_size / 2.0);
            let c = ctx.mesh.cell_center(cell);
            let (_, p_exit) = path_p.box_visit(c - half, c + half).expect("crossing lies in the cell");
            let (v_enter, _) = path_v.box_visit(c - half, c + half).expect("crossing lies in the cell");
            let veh = Track {
                id: id('v'),
                class: vehicle,
                path: path_v.clone(),
                motion: Motion::new(t_star - v_enter / vv, 0.0).cruise(vv, path_v.length()),
            };
            let ped = Track {
                id: id('p'),
                class: ObjectClass::Pedestrian,
                path: path_p.clone(),
                motion: Motion::new(t_star - gap - p_exit / vp_speed, 0.0).cruise(vp_speed, path_p.length()),
            };
            let (a, b) = pair(&veh.id, &ped.id);
            let truth = TruthRow {
                script: name.into(),
                metric: Metric::Pet,
                case: None,
                value: gap,
                t: t_star,
                id_a: a,
                id_b: b,
                movement,
                crosswalk: Some(crosswalk),
                expected_type: classify_p2v_type(movement, crosswalk, ctx.cfg).1,
            };
            Ok(Scripted { tracks: vec![veh, ped], truth: vec![truth], pet_cell: Some(cell) })
        }
    }
}

// ---------------------------------------------------------------- background

fn arrivals(rng: &mut ChaCha8Rng, rate_per_hour: f64, spec: &ScenarioSpec, pedestrians: bool) -> Vec<f64> {
    if rate_per_hour <= 0.0 {
        return Vec::new();
    }
    let max_mult = spec.max_multiplier(pedestrians);
    let exp = Exp::new(rate_per_hour / 3600.0 * max_mult).expect("positive rate");
    let mut out = Vec::new();
    let mut t = spec.start;
    loop {
        t += exp.sample(rng);
        if t >= spec.end() {
            return out;
        }
        if rng.random::<f64>() * max_mult < spec.multiplier(t, pedestrians) {
            out.push(t);
        }
    }
}

fn vehicle_class(rng: &mut ChaCha8Rng) -> ObjectClass {
    let u: f64 = rng.random();
    if u < 0.85 {
        ObjectClass::Car
    } else if u < 0.92 {
        ObjectClass::Truck
    } else if u < 0.97 {
        ObjectClass::Bus
    } else {
        ObjectClass::Motorcyclist
    }
}

fn background(spec: &ScenarioSpec, cfg: &IntersectionConfig, rng: &mut ChaCha8Rng) -> Vec<Track> {
    let plan = &spec.signal;
    let mut tracks = Vec::new();
    let entry = PATH_END - BOX_HALF;

    for bound in Bound::ALL {
        let through = cfg.through_phase(bound);
        let left = through.paired_left().expect("through phases are even");
        let green = plan.green[&through.number()];
        let rate = |p: Phase| spec.vehicle_rates.get(&p.number()).copied().unwrap_or(0.0);
        let mut queue: Vec<(f64, Turn)> = Vec::new();
        for (turn, r) in [
            (Turn::T, rate(through) * (1.0 - spec.right_share)),
            (Turn::R, rate(through) * spec.right_share),
            (Turn::L, rate(left)),
        ] {
            queue.extend(arrivals(rng, r, spec, false).into_iter().map(|a| (a, turn)));
        }
        queue.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut last = f64::NEG_INFINITY;
        for (a, turn) in queue {
            let release = plan.next_open(a.max(last + HEADWAY), spec.start, green);
            last = release;
            let speed = if turn == Turn::T { rng.random_range(9.0..11.0) } else { rng.random_range(5.5..6.5) };
            let class = vehicle_class(rng);
            let path = vehicle_path(MovementCode::new(bound, turn));
            let motion = Motion::new(release - entry / speed, 0.0).cruise(speed, path.length());
            tracks.push(Track { id: String::new(), class, path, motion });
        }
    }

    for leg in Leg::ALL {
        let phase = cfg.crosswalk_phase(leg);
        let rate = spec.pedestrian_rates.get(&phase.number()).copied().unwrap_or(0.0);
        let walk = plan.walk[&phase.number()];
        for a in arrivals(rng, rate, spec, true) {
            let speed = rng.random_range(1.3..1.6);
            let reverse = rng.random::<bool>();
            let (path, start) = if rng.random::<f64>() < spec.anomalous_share {
                let path = if rng.random::<bool>() { diagonal_path(leg.index()) } else { mid_block_path(leg, reverse) };
                (path, a)
            } else {
                (crosswalk_path(leg, reverse), plan.next_start(a, spec.start, walk) + rng.random_range(0.0..2.0))
            };
            let motion = Motion::new(start, 0.0).cruise(speed, path.length());
            tracks.push(Track { id: String::new(), class: ObjectClass::Pedestrian, path, motion });
        }
    }
    tracks
}

fn signal_log(spec: &ScenarioSpec, cfg: &IntersectionConfig) -> SignalLog {
    let plan = &spec.signal;
    let mut by_phase: BTreeMap<u8, Vec<(f64, f64, SignalState)>> = BTreeMap::new();
    let phases: BTreeSet<u8> = Leg::ALL.iter().map(|&l| cfg.crosswalk_phase(l).number()).collect();
    let mut c = spec.start;
    while c < spec.end() {
        for &p in &phases {
            let w = plan.walk[&p];
            let list = by_phase.entry(p).or_default();
            for (a, b, st) in
                [(0.0, w[0], SignalState::DontWalk), (w[0], w[1], SignalState::Walk), (w[1], plan.cycle, SignalState::DontWalk)]
            {
                let (t0, t1) = (c + a, (c + b).min(spec.end()));
                if t1 <= t0 {
                    continue;
                }
                match list.last_mut() {
                    Some(last) if last.2 == st && last.1 == t0 => last.1 = t1,
                    _ => list.push((t0, t1, st)),
                }
            }
        }
        c += plan.cycle;
    }
    let intervals = by_phase
        .into_iter()
        .flat_map(|(p, list)| {
            let phase = Phase::new(p).expect("valid phase");
            list.into_iter().map(move |(t_start, t_end, state)| SignalInterval { t_start, t_end, phase, state })
        })
        .collect();
    SignalLog::new(intervals).expect("generated intervals do not overlap")
}

// ---------------------------------------------------------------- generate

pub fn generate(spec: &ScenarioSpec, params: &Params) -> Result<Scenario> {
    spec.validate()?;
    params.validate()?;
    let cfg = spec.intersection();
    let ctx = Ctx { cfg: &cfg, params, mesh: build_mesh(&cfg)? };
    let window = (frame(spec.start), frame(spec.end()));
    let margin = params.pet.pet_window + 5.0;

    let mut scripted: Vec<Scripted> = Vec::new();
    for series in &spec.scripts {
        for k in 0..series.count {
            let name = format!("s{:03}", scripted.len() + 1);
            let t_star = frame_time(frame(series.at + k as f64 * series.every));
            scripted.push(build_script(&ctx, &name, &series.script, t_star)?);
        }
    }
    let mut spans: Vec<(f64, f64, String)> = Vec::new();
    for s in &scripted {
        let t0 = s.tracks.iter().map(|t| t.motion.start()).fold(f64::INFINITY, f64::min);
        let t1 = s.tracks.iter().map(|t| t.motion.end()).fold(f64::NEG_INFINITY, f64::max);
        let name = s.truth[0].script.clone();
        if t0 < spec.start || t1 > spec.end() {
            return Err(infeasible(format!("script {name} needs {t0:.1}..{t1:.1}, outside the scenario window")));
        }
        spans.push((t0 - margin, t1 + margin, name));
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in spans.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(infeasible(format!("scripts {} and {} overlap in time", w[0].2, w[1].2)));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut bg: Vec<Track> = background(spec, &cfg, &mut rng)
        .into_iter()
        .filter(|t| !spans.iter().any(|s| t.motion.start() < s.1 && t.motion.end() > s.0))
        .collect();
    bg.sort_by(|a, b| a.motion.start().total_cmp(&b.motion.start()));
    let (mut nv, mut np) = (0, 0);
    for t in &mut bg {
        t.id = if t.class == ObjectClass::Pedestrian {
            np += 1;
            format!("p{np:05}")
        } else {
            nv += 1;
            format!("v{nv:05}")
        };
    }

    let mut trajectories = Vec::new();
    let mut truth = Vec::new();
    for s in scripted {
        let trajs: Vec<Trajectory> = s.tracks.iter().filter_map(|t| t.sample(window)).collect();
        if let Some(cell) = s.pet_cell {
            let shared: BTreeSet<usize> = trajs
                .iter()
                .map(|tr| sweep_cells(tr, &ctx.mesh).into_iter().map(|c| c.0).collect::<BTreeSet<_>>())
                .reduce(|a, b| a.intersection(&b).copied().collect())
                .unwrap_or_default();
            if shared != BTreeSet::from([cell]) {
                return Err(infeasible(format!("script {}: paths share more than the conflict cell", s.truth[0].script)));
            }
        }
        trajectories.extend(trajs);
        truth.extend(s.truth);
    }
    trajectories.extend(bg.iter().filter_map(|t| t.sample(window)));
    trajectories.sort_by(|a, b| a.object_id.cmp(&b.object_id));

    Ok(Scenario { spec: spec.clone(), config: cfg.clone(), trajectories, signal_log: signal_log(spec, &cfg), truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ssm_core::analytics::{volume_matrix, VolumeMode};
    use ssm_core::kinematics::{estimate_velocities, VelocityOptions};
    use ssm_core::pet::{detect_pet_conflicts, extract_transits};
    use ssm_core::ttc::detect_ttc_conflicts;
    use ssm_core::ConflictEvent;

    fn spec(scripts: &str) -> ScenarioSpec {
        ScenarioSpec::from_json(&format!(
            r#"{{"name": "t", "seed": 7, "date": "2022-10-08", "start": "08:00", "duration": "00:10",
                "scripts": [{scripts}]}}"#
        ))
        .unwrap()
    }

    fn detect(s: &Scenario) -> Vec<ConflictEvent> {
        let p = Params::default();
        let trajs: Vec<_> = s.trajectories.iter().map(|t| estimate_velocities(t, VelocityOptions::default())).collect();
        let mut ev = detect_ttc_conflicts(&trajs, &p.ttc).unwrap();
        let mesh = build_mesh(&s.config).unwrap();
        ev.extend(detect_pet_conflicts(&extract_transits(&trajs, &mesh), &mesh, &p.pet));
        ev
    }

    fn only(s: &Scenario, metric: Metric) -> Vec<ConflictEvent> {
        detect(s).into_iter().filter(|e| e.metric == metric).collect()
    }

    #[test]
    fn paths_have_expected_shape() {
        let nbr = vehicle_path("NBR".parse().unwrap());
        assert_eq!(nbr.at(0.0), Vec2::new(2.5, -22.0));
        let end = nbr.at(nbr.length());
        assert!((end - Vec2::new(22.0, -2.5)).norm() < 1e-9);
        let wbt = vehicle_path("WBT".parse().unwrap());
        assert!((wbt.at(0.0) - Vec2::new(22.0, 2.5)).norm() < 1e-9);
        let w = crosswalk_path(Leg::W, false);
        assert!((w.at(0.0) - Vec2::new(-12.5, -11.5)).norm() < 1e-9);
        let (sv, sc) = wbt.crossing(&w).unwrap();
        assert!((wbt.at(sv) - Vec2::new(-12.5, 2.5)).norm() < 1e-9);
        assert!((sc - 14.0).abs() < 1e-9);
        let cfg = spec("").intersection();
        for mv in MovementCode::all() {
            let p = vehicle_path(mv);
            let samples = (0..=100).map(|i| Sample::new(i as f64 * 0.1, p.at(p.length() * i as f64 / 100.0).x, p.at(p.length() * i as f64 / 100.0).y)).collect();
            let tr = Trajectory::new(ObjectId::from("v"), ObjectClass::Car, samples).unwrap();
            assert_eq!(cfg.classify_vehicle_movement(&tr), Some(mv));
        }
    }

    #[test]
    fn clock_strings() {
        assert_eq!(parse_clock("10:30"), Some(37800.0));
        assert_eq!(parse_clock("00:00:05"), Some(5.0));
        assert_eq!(parse_clock("10"), None);
    }

    #[test]
    fn stationary_script_gives_one_event() {
        let s = generate(&spec(r#"{"kind": "ttc_stationary", "movement": "WBT", "crosswalk": "W", "ttc": 2.0, "at": "08:03"}"#), &Params::default())
            .unwrap();
        let ev = only(&s, Metric::Ttc);
        assert_eq!(ev.len(), 1, "{ev:?}");
        assert!((ev[0].value - 2.0).abs() < 0.01, "{}", ev[0].value);
        assert_eq!(ev[0].t, s.truth[0].t);
        assert!(only(&s, Metric::Pet).is_empty());
    }

    #[test]
    fn stationary_vehicle_obstacle() {
        let s = generate(
            &spec(r#"{"kind": "ttc_stationary", "movement": "NBT", "crosswalk": "N", "obstacle": "truck", "ttc": 1.5, "at": "08:03"}"#),
            &Params::default(),
        )
        .unwrap();
        let ev = detect(&s);
        assert_eq!(ev.len(), 1, "{ev:?}");
        assert!((ev[0].value - 1.5).abs() < 0.01);
    }

    #[test]
    fn following_script_gives_ttc_and_pet() {
        let s = generate(&spec(r#"{"kind": "ttc_following", "movement": "EBT", "ttc": 1.8, "at": "08:03"}"#), &Params::default()).unwrap();
        let ev = detect(&s);
        assert_eq!(ev.len(), 2, "{ev:?}");
        for row in &s.truth {
            let e = ev.iter().find(|e| e.metric == row.metric).unwrap();
            assert!((e.value - row.value).abs() < 0.01, "{:?} {} vs {}", row.metric, e.value, row.value);
        }
    }

    #[test]
    fn crossing_script_is_typed() {
        let s = generate(&spec(r#"{"kind": "ttc_crossing", "movement": "WBT", "crosswalk": "W", "ttc": 1.5, "at": "08:03"}"#), &Params::default())
            .unwrap();
        assert_eq!(s.truth[0].expected_type, P2vType::new(5));
        let ev = detect(&s);
        assert_eq!(ev.len(), 1, "{ev:?}");
        assert_eq!(ev[0].metric, Metric::Ttc);
        assert!((ev[0].value - 1.5).abs() < 0.01, "{}", ev[0].value);
    }

    #[test]
    fn pet_script_gives_one_severe_event() {
        let s = generate(&spec(r#"{"kind": "pet", "movement": "SBR", "crosswalk": "W", "gap": 2.5, "at": "08:03"}"#), &Params::default()).unwrap();
        assert_eq!(s.truth[0].expected_type, P2vType::new(1));
        let ev = detect(&s);
        assert_eq!(ev.len(), 1, "{ev:?}");
        assert_eq!(ev[0].metric, Metric::Pet);
        assert!((ev[0].value - 2.5).abs() < 0.01);
        assert!(ev[0].severe);
    }

    #[test]
    fn infeasible_scripts_are_rejected() {
        let p = Params::default();
        let too_long = spec(r#"{"kind": "pet", "movement": "SBR", "crosswalk": "W", "gap": 12, "at": "08:03"}"#);
        assert!(generate(&too_long, &p).unwrap_err().message.contains("gap"));
        let outside = spec(r#"{"kind": "pet", "movement": "SBR", "crosswalk": "W", "gap": 2, "at": "09:00"}"#);
        assert!(generate(&outside, &p).unwrap_err().message.contains("window"));
        let miss = spec(r#"{"kind": "ttc_crossing", "movement": "NBT", "crosswalk": "W", "ttc": 1.5, "at": "08:03"}"#);
        assert!(generate(&miss, &p).is_err());
        let overlap = spec(r#"{"kind": "pet", "movement": "SBR", "crosswalk": "W", "gap": 2, "at": "08:03", "every": 5, "count": 2}"#);
        assert!(generate(&overlap, &p).unwrap_err().message.contains("overlap"));
    }

    #[test]
    fn same_seed_same_output() {
        let mut s = ScenarioSpec::gameday();
        s.duration = 1800.0;
        s.scripts.clear();
        let a = generate(&s, &Params::default()).unwrap();
        let b = generate(&s, &Params::default()).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
        s.seed += 1;
        let c = generate(&s, &Params::default()).unwrap();
        assert_ne!(a.trajectories, c.trajectories);
    }

    #[test]
    fn background_rates_are_roughly_poisson() {
        let mut s = ScenarioSpec::gameday();
        s.scripts.clear();
        s.surges.clear();
        s.anomalous_share = 0.0;
        let sc = generate(&s, &Params::default()).unwrap();
        let m = volume_matrix(&sc.trajectories, &sc.config, VolumeMode::Pedestrian);
        let hours = s.duration / 3600.0;
        let expected: f64 = s.pedestrian_rates.values().sum::<f64>() * hours;
        let got = m.total() as f64;
        // Four standard deviations of a Poisson count.
        assert!((got - expected).abs() < 4.0 * expected.sqrt(), "{got} vs {expected}");
    }
}
