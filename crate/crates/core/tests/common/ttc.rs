//! Constant-velocity stepping oracles for the three TTC cases.
//!
//! Stationary and parallel cases: the bodies are points and "contact" is the
//! closest approach, counted only when the miss distance is within the
//! lateral tolerance. Crossing case: each body is a segment trailing the
//! tracked point by its clearance length; contact is the first step at which
//! the two segments touch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssm_core::ttc::{self, Party, PairState, TtcCase, TtcParams};
use ssm_core::{ObjectClass, ObjectId, Vec2};

pub const DT: f64 = 0.001;
pub const SIM_END: f64 = 20.0;
pub const TOL: f64 = 0.01;

pub fn party(id: &str, class: ObjectClass, pos: Vec2, vel: Vec2) -> Party {
    Party { id: ObjectId::from(id), class, pos, vel }
}

pub fn closest_approach_oracle(pair: &PairState, lateral: f64) -> Option<f64> {
    let dist = |t: f64| ((pair.b.pos + pair.b.vel * t) - (pair.a.pos + pair.a.vel * t)).norm();
    let mut prev = dist(0.0);
    let mut k = 1u32;
    loop {
        let t = k as f64 * DT;
        if t > SIM_END {
            return None;
        }
        let d = dist(t);
        if d > prev {
            // First local minimum was the previous step; at t = DT the
            // parties were already separating.
            let t_min = t - DT;
            return (t_min > 0.0 && prev <= lateral).then_some(t_min);
        }
        prev = d;
        k += 1;
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) - 1e-12 && p.x <= a.x.max(b.x) + 1e-12 && p.y >= a.y.min(b.y) - 1e-12 && p.y <= a.y.max(b.y) + 1e-12
}

fn segments_touch(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let (d1, d2) = (orient(q1, q2, p1), orient(q1, q2, p2));
    let (d3, d4) = (orient(p1, p2, q1), orient(p1, p2, q2));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

pub fn trailing_body_oracle(pair: &PairState, params: &TtcParams) -> Option<f64> {
    let body = |p: &Party, t: f64| {
        let front = p.pos + p.vel * t;
        let back = front - p.vel * (params.clearance.of(p.class) / p.vel.norm());
        (back, front)
    };
    let mut k = 0u32;
    loop {
        let t = k as f64 * DT;
        if t > SIM_END {
            return None;
        }
        let (a0, a1) = body(&pair.a, t);
        let (b0, b1) = body(&pair.b, t);
        if segments_touch(a0, a1, b0, b1) {
            return Some(t);
        }
        k += 1;
    }
}

fn random_dir(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::from_bearing_deg(rng.random_range(0.0..360.0))
}

fn class(rng: &mut ChaCha8Rng) -> ObjectClass {
    [ObjectClass::Pedestrian, ObjectClass::Car, ObjectClass::Bus, ObjectClass::Truck, ObjectClass::Motorcyclist][rng.random_range(0..5)]
}

pub fn stationary_config(rng: &mut ChaCha8Rng) -> PairState {
    let mover_pos = Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    let dir = random_dir(rng);
    let speed = rng.random_range(0.5..15.0);
    let ahead = rng.random_range(-5.0..40.0);
    let side = rng.random_range(-2.5..2.5);
    let fixed_pos = mover_pos + dir * ahead + dir.rotate_cw(1) * side;
    let a = party("a", class(rng), mover_pos, dir * speed);
    let b = party("b", class(rng), fixed_pos, Vec2::ZERO);
    if rng.random_bool(0.5) { PairState { t: 0.0, a, b } } else { PairState { t: 0.0, a: b, b: a } }
}

pub fn parallel_config(rng: &mut ChaCha8Rng) -> PairState {
    let dir = random_dir(rng);
    let skew = Vec2::from_bearing_deg(dir.bearing_deg() + rng.random_range(-4.0..4.0));
    let other = if rng.random_bool(0.2) { skew * -1.0 } else { skew };
    let pa = Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    let pb = pa + dir * rng.random_range(-30.0..30.0) + dir.rotate_cw(1) * rng.random_range(-2.5..2.5);
    let a = party("a", class(rng), pa, dir * rng.random_range(0.5..15.0));
    let b = party("b", class(rng), pb, other * rng.random_range(0.5..15.0));
    PairState { t: 0.0, a, b }
}

pub fn crossing_config(rng: &mut ChaCha8Rng) -> PairState {
    let conflict = Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    let da = random_dir(rng);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let db = Vec2::from_bearing_deg(da.bearing_deg() + sign * rng.random_range(10.0..170.0));
    let sa = rng.random_range(0.5..15.0);
    let dist_a = rng.random_range(-8.0..40.0);
    let sb = rng.random_range(0.5..15.0);
    // Half the time aim the second party at roughly the same arrival time.
    let dist_b = if rng.random_bool(0.5) {
        sb * (dist_a / sa + rng.random_range(-1.0..1.0))
    } else {
        rng.random_range(-8.0..40.0)
    };
    let a = party("a", class(rng), conflict - da * dist_a, da * sa);
    let b = party("b", class(rng), conflict - db * dist_b, db * sb);
    PairState { t: 0.0, a, b }
}

pub struct Tally {
    pub finite: usize,
    pub infinite: usize,
    pub failures: Vec<String>,
    pub max_err: f64,
}

pub fn run_case(n: usize, seed: u64, gen: fn(&mut ChaCha8Rng) -> PairState, want: TtcCase) -> Tally {
    let params = TtcParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally { finite: 0, infinite: 0, failures: vec![], max_err: 0.0 };
    let mut i = 0;
    while tally.finite + tally.infinite + tally.failures.len() < n {
        let pair = gen(&mut rng);
        i += 1;
        if ttc::classify_case(&pair, &params) != want {
            continue;
        }
        let r = ttc::ttc(&pair, &params);
        let oracle = match want {
            TtcCase::Crossing => trailing_body_oracle(&pair, &params),
            _ => closest_approach_oracle(&pair, params.lateral_tolerance),
        };
        match (r.value.is_finite(), oracle) {
            (true, Some(t)) if (r.value - t).abs() <= TOL => {
                tally.finite += 1;
                tally.max_err = tally.max_err.max((r.value - t).abs());
            }
            (false, None) => tally.infinite += 1,
            (_, o) => tally.failures.push(format!("config {i}: analytic {} oracle {o:?} {pair:?}", r.value)),
        }
    }
    tally
}

pub fn check(t: Tally) {
    assert!(t.failures.is_empty(), "{} mismatches, first: {}", t.failures.len(), t.failures[0]);
    assert!(t.finite > 50, "too few finite configurations: {}", t.finite);
    assert!(t.infinite > 50, "too few infinite configurations: {}", t.infinite);
}

