//! PET by point membership: resample every trajectory at 1 ms, read off the
//! cell of each sample, and redo the pairing and episode rules from scratch.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssm_core::pet::{MeshGrid, PetParams};
use ssm_core::{ConflictEvent, ObjectClass, ObjectId, Sample, Trajectory, Vec2};

pub const STEP_MS: i64 = 1;
pub const VALUE_TOL: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct OracleEvent {
    pub a: ObjectId,
    pub b: ObjectId,
    pub value: f64,
    /// Follower entry times of the first and last record in the episode.
    pub t_first: f64,
    pub t_last: f64,
    /// Minimum raw gap of the episode was negative.
    pub overlap: bool,
}

fn position_at(s: &[Sample], t: f64) -> Vec2 {
    let i = s.partition_point(|x| x.t <= t).clamp(1, s.len() - 1);
    let (a, b) = (s[i - 1], s[i]);
    let u = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
    a.pos + (b.pos - a.pos) * u
}

fn cell_of(mesh: &MeshGrid, p: Vec2) -> Option<usize> {
    let c = ((p.x - mesh.origin.x) / mesh.cell_size).floor();
    let r = ((p.y - mesh.origin.y) / mesh.cell_size).floor();
    if c < 0.0 || r < 0.0 || c >= mesh.n_cols as f64 || r >= mesh.n_rows as f64 {
        return None;
    }
    Some(r as usize * mesh.n_cols + c as usize)
}

struct Visit {
    obj: usize,
    enter: f64,
    exit: f64,
}

pub fn membership_oracle(trajs: &[Trajectory], mesh: &MeshGrid, params: &PetParams) -> Vec<OracleEvent> {
    let mut per_cell: BTreeMap<usize, Vec<Visit>> = BTreeMap::new();
    for (obj, tr) in trajs.iter().enumerate() {
        let s = tr.samples();
        let k0 = (tr.start_time() * 1000.0).ceil() as i64;
        let k1 = (tr.end_time() * 1000.0).floor() as i64;
        let mut runs: Vec<(usize, f64, f64)> = Vec::new();
        let mut k = k0;
        while k <= k1 {
            let t = k as f64 / 1000.0;
            if let Some(c) = cell_of(mesh, position_at(s, t)) {
                match runs.last_mut() {
                    Some(last) if last.0 == c && (t - last.2) < 0.0015 => last.2 = t,
                    _ => runs.push((c, t, t)),
                }
            }
            k += STEP_MS;
        }
        let mut by_cell: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for (c, a, b) in runs {
            let v = by_cell.entry(c).or_default();
            match v.last_mut() {
                Some(last) if a - last.1 < 0.1 => last.1 = last.1.max(b),
                _ => v.push((a, b)),
            }
        }
        for (c, v) in by_cell {
            per_cell.entry(c).or_default().extend(v.into_iter().map(|(enter, exit)| Visit { obj, enter, exit }));
        }
    }
    // (pair) -> list of (follower entry, raw gap)
    let mut records: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for visits in per_cell.values_mut() {
        visits.sort_by(|x, y| x.enter.total_cmp(&y.enter));
        for w in visits.windows(2) {
            let (l, f) = (&w[0], &w[1]);
            if l.obj == f.obj {
                continue;
            }
            let peds = [l.obj, f.obj].iter().filter(|&&o| trajs[o].class == ObjectClass::Pedestrian).count();
            if peds == 2 {
                continue;
            }
            let gap = f.enter - l.exit;
            if gap > params.pet_window {
                continue;
            }
            let key = (l.obj.min(f.obj), l.obj.max(f.obj));
            records.entry(key).or_default().push((f.enter, gap));
        }
    }
    let mut out = Vec::new();
    for ((i, j), mut recs) in records {
        recs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut start = 0;
        for k in 0..recs.len() {
            if k + 1 < recs.len() && recs[k + 1].0 - recs[k].0 <= params.episode_gap {
                continue;
            }
            let ep = &recs[start..=k];
            let min_gap = ep.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            let (a, b) = {
                let (x, y) = (&trajs[i].object_id, &trajs[j].object_id);
                if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) }
            };
            out.push(OracleEvent { a, b, value: min_gap.max(0.0), t_first: ep[0].0, t_last: ep[k - start].0, overlap: min_gap < 0.0 });
            start = k + 1;
        }
    }
    out
}

/// Match grid events to oracle events pair by pair, episode by episode.
/// Returns (matched, overlap events checked, largest value difference).
pub fn compare(grid: &[ConflictEvent], oracle: &[OracleEvent]) -> Result<(usize, usize, f64), String> {
    let mut g: BTreeMap<(ObjectId, ObjectId), Vec<&ConflictEvent>> = BTreeMap::new();
    for e in grid {
        g.entry((e.id_a.clone(), e.id_b.clone())).or_default().push(e);
    }
    let mut o: BTreeMap<(ObjectId, ObjectId), Vec<&OracleEvent>> = BTreeMap::new();
    for e in oracle {
        o.entry((e.a.clone(), e.b.clone())).or_default().push(e);
    }
    let keys: std::collections::BTreeSet<_> = g.keys().chain(o.keys()).cloned().collect();
    let (mut matched, mut overlaps, mut worst) = (0, 0, 0.0f64);
    for key in keys {
        let mut ge = g.remove(&key).unwrap_or_default();
        let mut oe = o.remove(&key).unwrap_or_default();
        ge.sort_by(|x, y| x.t.total_cmp(&y.t));
        oe.sort_by(|x, y| x.t_first.total_cmp(&y.t_first));
        if ge.len() != oe.len() {
            return Err(format!("pair {key:?}: grid {} events, oracle {} events ({ge:?} vs {oe:?})", ge.len(), oe.len()));
        }
        for (x, y) in ge.iter().zip(&oe) {
            let diff = (x.value - y.value).abs();
            if diff > VALUE_TOL {
                return Err(format!("pair {key:?}: grid PET {} vs oracle {}", x.value, y.value));
            }
            if x.t < y.t_first - VALUE_TOL || x.t > y.t_last + VALUE_TOL {
                return Err(format!("pair {key:?}: grid t {} outside oracle episode [{}, {}]", x.t, y.t_first, y.t_last));
            }
            if y.overlap && y.value == 0.0 {
                if x.value != 0.0 {
                    return Err(format!("pair {key:?}: overlap episode reported PET {}", x.value));
                }
                overlaps += 1;
            }
            worst = worst.max(diff);
            matched += 1;
        }
    }
    Ok((matched, overlaps, worst))
}

fn straight(id: String, class: ObjectClass, from: Vec2, to: Vec2, speed: f64, t0: f64, pause: Option<(f64, f64)>) -> Trajectory {
    // Frame-aligned samples along the segment, with an optional stop at
    // fraction `pause.0` of the way lasting `pause.1` seconds.
    let len = (to - from).norm();
    let t_move = len / speed;
    let (pf, pd) = pause.unwrap_or((0.0, 0.0));
    let total = t_move + pd;
    let f0 = (t0 * 10.0).round() as i64;
    let n = (total * 10.0).ceil() as i64;
    let samples = (0..=n)
        .map(|k| {
            let dt = k as f64 / 10.0;
            let moved = if dt < pf * t_move {
                dt
            } else if dt < pf * t_move + pd {
                pf * t_move
            } else {
                (dt - pd).min(t_move)
            };
            let p = from.lerp(to, moved / t_move);
            Sample::new((f0 + k) as f64 / 10.0, p.x, p.y)
        })
        .collect();
    Trajectory::new(ObjectId(id), class, samples).unwrap()
}

/// Axis-aligned traffic over a 40 m region: vehicles on the four through
/// lanes, pedestrians on the four crosswalk lines, some of them pausing.
/// Paths run parallel to the grid so no path clips a cell corner.
pub fn axis_aligned_scenario(seed: u64, n_veh: usize, n_ped: usize, span: f64) -> Vec<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let jitter = |rng: &mut ChaCha8Rng| rng.random_range(-0.3..0.3);
    for i in 0..n_veh {
        let lane = rng.random_range(0..4);
        let off = 2.5 + jitter(&mut rng);
        let (from, to) = match lane {
            0 => (Vec2::new(off, -22.0), Vec2::new(off, 22.0)),
            1 => (Vec2::new(-off, 22.0), Vec2::new(-off, -22.0)),
            2 => (Vec2::new(-22.0, -off), Vec2::new(22.0, -off)),
            _ => (Vec2::new(22.0, off), Vec2::new(-22.0, off)),
        };
        let class = [ObjectClass::Car, ObjectClass::Car, ObjectClass::Bus, ObjectClass::Truck, ObjectClass::Motorcyclist][rng.random_range(0..5)];
        let speed = rng.random_range(3.0..15.0);
        let t0 = rng.random_range(0.0..span);
        let pause = rng.random_bool(0.2).then(|| (rng.random_range(0.2..0.8), rng.random_range(1.0..6.0)));
        out.push(straight(format!("v{i:03}"), class, from, to, speed, t0, pause));
    }
    for i in 0..n_ped {
        let cw = rng.random_range(0..4);
        let off = 12.5 + jitter(&mut rng);
        let (mut from, mut to) = match cw {
            0 => (Vec2::new(-12.0, off), Vec2::new(12.0, off)),
            1 => (Vec2::new(off, -12.0), Vec2::new(off, 12.0)),
            2 => (Vec2::new(-12.0, -off), Vec2::new(12.0, -off)),
            _ => (Vec2::new(-off, -12.0), Vec2::new(-off, 12.0)),
        };
        if rng.random_bool(0.5) {
            std::mem::swap(&mut from, &mut to);
        }
        let speed = rng.random_range(0.8..2.0);
        let t0 = rng.random_range(0.0..span);
        let pause = rng.random_bool(0.3).then(|| (rng.random_range(0.1..0.9), rng.random_range(1.0..8.0)));
        out.push(straight(format!("p{i:03}"), ObjectClass::Pedestrian, from, to, speed, t0, pause));
    }
    out
}
