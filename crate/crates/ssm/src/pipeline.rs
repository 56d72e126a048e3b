//! Per-day analysis: load, fill velocities, detect and classify conflicts.

use ssm_core::analytics::VolumeMode;
use ssm_core::classify::{classify_events, SignalLog, TrajectoryLabels};
use ssm_core::kinematics::estimate_velocities;
use ssm_core::pet::{build_mesh, detect_pet_conflicts, extract_transits};
use ssm_core::ttc::detect_ttc_conflicts;
use ssm_core::{ConflictEvent, ConflictKind, IntersectionConfig, Trajectory};

use crate::config::{DaySpec, Params};
use crate::error::Result;
use crate::io::{read_signal_log, read_trajectories, Rejected};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Default)]
pub enum MetricChoice {
    Ttc,
    Pet,
    #[default]
    Both,
}

impl MetricChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricChoice::Ttc => "ttc",
            MetricChoice::Pet => "pet",
            MetricChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Default)]
pub enum ModeChoice {
    #[default]
    Pedestrian,
    Vehicle,
}

impl ModeChoice {
    pub fn volume_mode(self) -> VolumeMode {
        match self {
            ModeChoice::Pedestrian => VolumeMode::Pedestrian,
            ModeChoice::Vehicle => VolumeMode::Vehicle,
        }
    }

    /// Conflict kind studied in this mode.
    pub fn kind(self) -> ConflictKind {
        match self {
            ModeChoice::Pedestrian => ConflictKind::P2V,
            ModeChoice::Vehicle => ConflictKind::V2V,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.volume_mode().as_str()
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDay {
    pub spec: DaySpec,
    /// With velocities filled in.
    pub trajectories: Vec<Trajectory>,
    pub rows: usize,
    pub rejected: Vec<Rejected>,
    pub signal_log: Option<SignalLog>,
    pub signal_rejected: Vec<Rejected>,
}

impl LoadedDay {
    pub fn group(&self) -> String {
        self.spec.group_label()
    }
}

pub fn fill_velocities(trajs: &[Trajectory], params: &Params) -> Vec<Trajectory> {
    trajs.iter().map(|t| estimate_velocities(t, params.velocity_options())).collect()
}

pub fn load_day(day: &DaySpec, params: &Params) -> Result<LoadedDay> {
    let parsed = read_trajectories(&day.trajectories)?;
    let (signal_log, signal_rejected) = match &day.signal_log {
        Some(p) => {
            let s = read_signal_log(p)?;
            (Some(s.log), s.rejected)
        }
        None => (None, Vec::new()),
    };
    Ok(LoadedDay {
        spec: day.clone(),
        trajectories: fill_velocities(&parsed.trajectories, params),
        rows: parsed.rows,
        rejected: parsed.rejected,
        signal_log,
        signal_rejected,
    })
}

/// Detect the selected metrics and label every event with movement, type
/// and jaywalk flag. Trajectories must already carry velocities where
/// possible; single-sample tracks without one are left out of TTC.
pub fn detect(
    trajs: &[Trajectory],
    cfg: &IntersectionConfig,
    log: Option<&SignalLog>,
    params: &Params,
    metric: MetricChoice,
) -> Result<Vec<ConflictEvent>> {
    let mut events = Vec::new();
    if metric != MetricChoice::Pet {
        let moving: Vec<Trajectory> = trajs.iter().filter(|t| t.has_velocities()).cloned().collect();
        events.extend(detect_ttc_conflicts(&moving, &params.ttc)?);
    }
    if metric != MetricChoice::Ttc {
        let mesh = build_mesh(cfg)?;
        events.extend(detect_pet_conflicts(&extract_transits(trajs, &mesh), &mesh, &params.pet));
    }
    let labels = TrajectoryLabels::build(trajs, cfg, log, params.t_grace);
    classify_events(&mut events, &labels, cfg);
    ssm_core::event::sort_events(&mut events);
    Ok(events)
}

pub fn detect_day(day: &LoadedDay, cfg: &IntersectionConfig, params: &Params, metric: MetricChoice) -> Result<Vec<ConflictEvent>> {
    detect(&day.trajectories, cfg, day.signal_log.as_ref(), params, metric)
}

/// Outcome of checking one ground-truth row against detected events.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthMatch {
    pub row: usize,
    /// Events with the row's metric and participants.
    pub candidates: Vec<usize>,
    pub ok: bool,
}

/// A row is matched when exactly one event has its metric and participant
/// pair, and that event's value is within `tol` seconds.
pub fn match_truth(events: &[ConflictEvent], truth: &[crate::synth::TruthRow], tol: f64) -> Vec<TruthMatch> {
    truth
        .iter()
        .enumerate()
        .map(|(row, r)| {
            let candidates: Vec<usize> = events
                .iter()
                .enumerate()
                .filter(|(_, e)| e.metric == r.metric && e.id_a == r.id_a && e.id_b == r.id_b)
                .map(|(i, _)| i)
                .collect();
            let ok = candidates.len() == 1 && (events[candidates[0]].value - r.value).abs() <= tol;
            TruthMatch { row, candidates, ok }
        })
        .collect()
}
