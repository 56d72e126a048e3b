//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so each criterion reports its own
//! measurements and timing. Exit status is nonzero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{NaiveDate, NaiveTime};
use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssm::cli::{run, Cli};
use ssm::config::Params;
use ssm::games::GamesClient;
use ssm::pipeline::{detect, fill_velocities, MetricChoice};
use ssm::synth::{generate, ScenarioSpec};
use ssm_core::analytics::{volume_matrix, VolumeMode};
use ssm_core::classify::{jaywalk_movement_histogram, p2v_type, type_counts};
use ssm_core::event::P2vType;
use ssm_core::game::estimated_end;
use ssm_core::pet::{build_mesh, detect_pet_conflicts, extract_transits};
use ssm_core::stats::{p_value, p_value_t, pearson_r, PValueMethod};
use ssm_core::ttc::{self, PairState, TtcCase, TtcParams};
use ssm_core::{CrosswalkRole, IntersectionConfig, Leg, MovementCode, ObjectClass, Turn, Vec2};

// Pinned tolerances and budgets.
const TTC_CONFIGS_PER_CASE: usize = 1000;
const TTC_TOL: f64 = 0.01;
const TTC_NO_CONTACT_HORIZON: f64 = 20.0;
const TTC_BUDGET: Duration = Duration::from_secs(30);
const PET_SCENARIOS: u64 = 50;
const PET_TOL: f64 = 0.1;
const PET_BUDGET: Duration = Duration::from_secs(60);
const R_TOL: f64 = 1e-12;
const PAPER_P: f64 = 0.017;
const PAPER_P_TOL: f64 = 0.001;
const RATIO_RANGE: (f64, f64) = (2.5, 3.5);
const GAMEDAY_BUDGET: Duration = Duration::from_secs(60);

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn ttc_oracle() -> Check {
    // The shared oracle constants must agree with the pinned ones here.
    ensure(oracle::ttc::TOL == TTC_TOL && oracle::ttc::SIM_END == TTC_NO_CONTACT_HORIZON && oracle::ttc::DT == 0.001, || {
        "oracle constants drifted".into()
    })?;
    let start = Instant::now();
    let mut parts = Vec::new();
    for (name, seed, gen, case) in [
        ("stationary", 101, oracle::ttc::stationary_config as fn(&mut ChaCha8Rng) -> PairState, TtcCase::Stationary),
        ("parallel", 102, oracle::ttc::parallel_config, TtcCase::Parallel),
        ("crossing", 103, oracle::ttc::crossing_config, TtcCase::Crossing),
    ] {
        let t = oracle::ttc::run_case(TTC_CONFIGS_PER_CASE, seed, gen, case);
        ensure(t.failures.is_empty(), || format!("{name}: {} mismatches, first {}", t.failures.len(), t.failures[0]))?;
        ensure(t.finite > 0 && t.infinite > 0, || format!("{name}: finite {} infinite {}", t.finite, t.infinite))?;
        parts.push(format!("{name} {}+{}∞ max err {:.4}", t.finite, t.infinite, t.max_err));
    }
    let el = start.elapsed();
    ensure(el < TTC_BUDGET, || format!("took {el:?}"))?;
    Ok(format!("{} in {:.1}s", parts.join(", "), el.as_secs_f64()))
}

// ---------------------------------------------------------------- 2

fn pinned_ttc() -> Check {
    let p = TtcParams::default();
    let car = ObjectClass::Car;
    let party = oracle::ttc::party;
    let stationary =
        PairState { t: 0.0, a: party("a", car, Vec2::ZERO, Vec2::new(5.0, 0.0)), b: party("b", car, Vec2::new(10.0, 0.0), Vec2::ZERO) };
    let follow = |vf: f64, vl: f64| PairState {
        t: 0.0,
        a: party("f", car, Vec2::ZERO, Vec2::new(vf, 0.0)),
        b: party("l", car, Vec2::new(10.0, 0.0), Vec2::new(vl, 0.0)),
    };
    let got = [
        ttc::ttc(&stationary, &p).value,
        ttc::ttc(&follow(15.0, 10.0), &p).value,
        ttc::ttc(&follow(10.0, 10.0), &p).value,
        ttc::ttc(&follow(8.0, 10.0), &p).value,
    ];
    let want = [2.0, 2.0, f64::INFINITY, f64::INFINITY];
    ensure(got == want, || format!("got {got:?}, want {want:?}"))?;
    Ok(format!("{got:?}"))
}

// ---------------------------------------------------------------- 3

fn pet_oracle() -> Check {
    ensure(oracle::pet::VALUE_TOL == PET_TOL && oracle::pet::STEP_MS == 1, || "oracle constants drifted".into())?;
    let start = Instant::now();
    let params = Params::default();
    let (mut matched, mut overlaps, mut worst) = (0, 0, 0.0f64);
    for seed in 0..PET_SCENARIOS {
        // Ten dense minutes of the gameday scenario's background traffic,
        // turning and anomalous paths included.
        let mut s = ScenarioSpec::gameday();
        s.name = format!("pet{seed}");
        s.seed = seed;
        s.scripts.clear();
        s.surges.clear();
        s.start = 8.0 * 3600.0;
        s.duration = 600.0;
        s.pedestrian_rates.values_mut().for_each(|r| *r = 200.0);
        s.vehicle_rates.values_mut().for_each(|r| *r *= 3.0);
        let sc = generate(&s, &params).map_err(|e| e.to_string())?;
        let mesh = build_mesh(&sc.config).map_err(|e| e.to_string())?;
        let grid = detect_pet_conflicts(&extract_transits(&sc.trajectories, &mesh), &mesh, &params.pet);
        let orc = oracle::pet::membership_oracle(&sc.trajectories, &mesh, &params.pet);
        let (n, o, w) = oracle::pet::compare(&grid, &orc).map_err(|e| format!("scenario {seed}: {e}"))?;
        matched += n;
        overlaps += o;
        worst = worst.max(w);
    }
    ensure(overlaps > 0, || "no overlap episodes exercised".into())?;
    let el = start.elapsed();
    ensure(el < PET_BUDGET, || format!("took {el:?}"))?;
    Ok(format!("{matched} events ({overlaps} overlaps at 0) over {PET_SCENARIOS} scenarios, max diff {worst:.3}s, {:.1}s", el.as_secs_f64()))
}

// ---------------------------------------------------------------- 4

fn classification() -> Check {
    let cfg = IntersectionConfig::symmetric(10.0, 3.0, 20.0, ssm_core::intersection::MajorAxis::NorthSouth).unwrap();
    let all_roles = [CrosswalkRole::Near, CrosswalkRole::Far, CrosswalkRole::AdjacentParallel, CrosswalkRole::ParallelOpposite];
    let mut n = 0;
    for mv in MovementCode::all() {
        let mut roles: Vec<CrosswalkRole> = Leg::ALL.iter().map(|&l| cfg.crosswalk_role(mv, l)).collect();
        roles.sort();
        let mut want = all_roles.to_vec();
        want.sort();
        ensure(roles == want, || format!("{mv}: roles {roles:?} are not a bijection"))?;
        n += 1;
    }
    ensure(n == 12, || format!("{n} movements"))?;

    // Right-hand traffic: the curb turn is R, the cross turn is L.
    let table = [
        (Turn::R, CrosswalkRole::AdjacentParallel, 1),
        (Turn::R, CrosswalkRole::Near, 2),
        (Turn::L, CrosswalkRole::ParallelOpposite, 3),
        (Turn::L, CrosswalkRole::AdjacentParallel, 4),
        (Turn::T, CrosswalkRole::Far, 5),
        (Turn::T, CrosswalkRole::Near, 6),
    ];
    let mut mapped = 0;
    for turn in [Turn::L, Turn::T, Turn::R] {
        for role in all_roles {
            let got = p2v_type(turn, role, cfg.curb_turn());
            let want = table.iter().find(|e| e.0 == turn && e.1 == role).map(|e| P2vType::new(e.2).unwrap());
            ensure(got == want, || format!("({turn:?}, {role:?}) -> {got:?}, want {want:?}"))?;
            mapped += usize::from(got.is_some());
        }
    }
    ensure(mapped == 6, || format!("{mapped} mapped pairs"))?;
    Ok("12 movements biject onto 4 roles; 6 of 12 (turn, role) pairs typed".into())
}

// ---------------------------------------------------------------- 5

fn statistics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(3..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let a = loop {
            let a: f64 = rng.random_range(-50.0..50.0);
            if a.abs() > 1e-3 {
                break a;
            }
        };
        let b = rng.random_range(-1e3..1e3);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let r = pearson_r(&xs, &ys).map_err(|e| e.to_string())?;
        worst = worst.max((r - a.signum()).abs());
    }
    ensure(worst <= R_TOL, || format!("|r - sign(a)| reached {worst:e}"))?;

    let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let ys = [0.1, 0.4, 0.5, 0.9, 1.7, 2.0];
    let p = p_value(&xs, &ys, PValueMethod::permutation()).map_err(|e| e.to_string())?;
    ensure(p.value == 2.0 / 720.0 && p.counts == Some((2, 720)), || format!("permutation p {:?}", p))?;

    let pt = p_value_t(0.89, 6);
    ensure((pt - PAPER_P).abs() <= PAPER_P_TOL, || format!("t-dist p {pt}"))?;
    Ok(format!("max |r∓1| {worst:.1e}; permutation p = 2/720; t-dist p(0.89, 6) = {pt:.4}"))
}

// ---------------------------------------------------------------- 6

fn fixtures() -> Check {
    type Row = (&'static str, (i32, u32, u32), (u32, u32), u32, f64, f64);
    let rows: [Row; 6] = [
        ("South Florida @ Florida", (2022, 9, 17), (19, 30), 88_496, 5.235, 0.268),
        ("Eastern Washington @ Florida", (2022, 10, 2), (12, 0), 72_462, 1.306, 0.999),
        ("Missouri @ Florida", (2022, 10, 8), (12, 0), 88_471, 5.102, 0.930),
        ("LSU @ Florida", (2022, 10, 15), (19, 0), 90_585, 4.006, 0.088),
        ("Samford @ Florida", (2021, 11, 13), (12, 0), 70_098, 3.263, 0.999),
        ("Florida State @ Florida", (2021, 11, 27), (12, 0), 88_491, 6.189, 0.914),
    ];
    let client = GamesClient::fixture();
    for (matchup, (y, m, d), (hh, mm), att, exc, home) in rows {
        let date = NaiveDate::from_ymd_opt(y, m, d).unwrap();
        let g = client.fetch_game(date).map_err(|e| e.to_string())?.ok_or(format!("{date}: missing"))?;
        ensure(g.matchup == matchup, || format!("{date}: matchup {}", g.matchup))?;
        ensure(g.start_time == NaiveTime::from_hms_opt(hh, mm, 0).unwrap(), || format!("{date}: start {}", g.start_time))?;
        ensure(g.attendance == att, || format!("{date}: attendance {}", g.attendance))?;
        ensure(g.excitement_index.to_bits() == exc.to_bits(), || format!("{date}: excitement {}", g.excitement_index))?;
        ensure(g.home_win_prob.to_bits() == f64::to_bits(home), || format!("{date}: home prob {}", g.home_win_prob))?;
        ensure(format!("{:.3}", g.away_win_prob) == format!("{:.3}", 1.0 - home), || format!("{date}: away prob {}", g.away_win_prob))?;
    }
    for d in ["2022-09-24", "2022-10-01", "2022-10-09", "2022-10-22"] {
        let date: NaiveDate = d.parse().unwrap();
        ensure(client.fetch_game(date).map_err(|e| e.to_string())?.is_none(), || format!("{d} should have no game"))?;
    }
    let end = estimated_end(NaiveTime::from_hms_opt(12, 0, 0).unwrap());
    ensure(end == NaiveTime::from_hms_opt(15, 22, 0).unwrap(), || format!("estimated end {end}"))?;
    Ok("6 rows bit-exact; estimated_end(12:00) = 15:22".into())
}

// ---------------------------------------------------------------- 7

fn gameday() -> Check {
    let start = Instant::now();
    let params = Params::default();
    let spec = ScenarioSpec::gameday();
    let sc = generate(&spec, &params).map_err(|e| e.to_string())?;
    let trajs = fill_velocities(&sc.trajectories, &params);
    let events = detect(&trajs, &sc.config, Some(&sc.signal_log), &params, MetricChoice::Both).map_err(|e| e.to_string())?;

    // Surge hours against the other whole hours of the scenario window.
    let first = (spec.start / 3600.0) as usize;
    let last = (spec.end() / 3600.0) as usize;
    let surge: Vec<usize> = spec.surges.iter().flat_map(|s| (s.start / 3600.0) as usize..(s.end / 3600.0) as usize).collect();
    let base: Vec<usize> = (first..last).filter(|h| !surge.contains(h)).collect();
    let m = volume_matrix(&trajs, &sc.config, VolumeMode::Pedestrian);
    let ratio = m.mean_hourly(surge.iter().copied()) / m.mean_hourly(base.iter().copied());
    ensure((RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio), || format!("pre-game ratio {ratio:.3}"))?;

    let types = type_counts(&events);
    let top2: Vec<u8> = types.iter().take(2).map(|(t, _)| t.number()).collect();
    let mut sorted = top2.clone();
    sorted.sort();
    ensure(sorted == [1, 5], || format!("top types {types:?}"))?;

    let jay = jaywalk_movement_histogram(&events);
    let top = jay.first().and_then(|(m, _)| *m).map(|m| m.to_string());
    ensure(top.as_deref() == Some("WBT"), || format!("top jaywalk movement {top:?} in {jay:?}"))?;
    let el = start.elapsed();
    ensure(el < GAMEDAY_BUDGET, || format!("took {el:?}"))?;
    let tstr: Vec<String> = types.iter().map(|(t, n)| format!("T{t}:{n}")).collect();
    Ok(format!(
        "ratio {ratio:.2}; types {}; WBT {} of {} jaywalk; {:.1}s",
        tstr.join(" "),
        jay[0].1,
        jay.iter().map(|e| e.1).sum::<usize>(),
        el.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 8

fn cli(args: &[&str]) -> Result<(), String> {
    let c = Cli::try_parse_from(std::iter::once("ssm").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(&c).map(|_| ()).map_err(|e| e.to_string())
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline(root: &Path) -> Result<(), String> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    cli(&["synth", "--out", &p("synth")])?;
    let cfg = p("synth/run.json");
    cli(&["ingest", "--config", &cfg, "--out", &p("ingest")])?;
    cli(&["conflicts", "--config", &cfg, "--out", &p("conflicts")])?;
    cli(&["volumes", "--config", &cfg, "--out", &p("volumes"), "--svg"])?;
    cli(&["aggregate", "--config", &cfg, "--out", &p("aggregate"), "--svg"])?;
    cli(&["spatial", "--config", &cfg, "--out", &p("spatial"), "--svg"])?;
    cli(&["report", "--config", &cfg, "--out", &p("report")])?;
    Ok(())
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&a)?;
    pipeline(&b)?;
    // Rerunning into an existing output directory replaces it identically.
    pipeline(&a)?;
    let (ta, tb) = (tree(&a), tree(&b));
    ensure(ta.keys().eq(tb.keys()), || "artifact sets differ".into())?;
    let differing: Vec<&String> = ta.iter().filter(|(k, v)| tb[*k] != **v).map(|(k, _)| k).collect();
    ensure(differing.is_empty(), || format!("differing files: {differing:?}"))?;
    let manifests = ta.keys().filter(|k| k.ends_with("manifest.json")).count();
    let csvs = ta.keys().filter(|k| k.ends_with(".csv")).count();
    ensure(manifests == 7, || format!("{manifests} manifests"))?;
    Ok(format!("{} files identical across runs ({csvs} CSV, {manifests} manifests)", ta.len()))
}

// ---------------------------------------------------------------- driver

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("TTC oracle suite", ttc_oracle),
        ("TTC pinned values", pinned_ttc),
        ("PET brute-force equivalence", pet_oracle),
        ("classification tables", classification),
        ("statistics", statistics),
        ("game fixtures", fixtures),
        ("gameday pattern", gameday),
        ("determinism", determinism),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match res {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} passed in {:.1}s", criteria.len() - failed, criteria.len(), suite.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
