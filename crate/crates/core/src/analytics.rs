//! Volume matrices, time-of-day buckets, aggregated conflict series, spatial
//! histograms and density surfaces, and the volume/win-probability
//! correlation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::intersection::IntersectionConfig;
use crate::model::{Phase, Trajectory};
use crate::pet::MeshGrid;
use crate::stats::{self, PValue, PValueMethod};

pub const HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeBucket {
    EarlyMorning,
    LateMorning,
    EarlyAfternoon,
    LateAfternoon,
    Evening,
    Night,
}

impl TimeBucket {
    pub const ALL: [TimeBucket; 6] = [
        TimeBucket::EarlyMorning,
        TimeBucket::LateMorning,
        TimeBucket::EarlyAfternoon,
        TimeBucket::LateAfternoon,
        TimeBucket::Evening,
        TimeBucket::Night,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimeBucket::EarlyMorning => "Early Morning",
            TimeBucket::LateMorning => "Late Morning",
            TimeBucket::EarlyAfternoon => "Early Afternoon",
            TimeBucket::LateAfternoon => "Late Afternoon",
            TimeBucket::Evening => "Evening",
            TimeBucket::Night => "Night",
        }
    }

    /// Half-open range in hours since midnight.
    pub fn hours(self) -> (u32, u32) {
        let start = 8 + 2 * self as u32;
        (start, start + 2)
    }
}

/// Two-hour time-of-day bucket between 08:00 and 20:00, half-open.
pub fn bucket_of(t: f64) -> Option<TimeBucket> {
    if !(8.0 * HOUR..20.0 * HOUR).contains(&t) {
        return None;
    }
    let k = libm::floor((t - 8.0 * HOUR) / (2.0 * HOUR)) as usize;
    TimeBucket::ALL.get(k).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VolumeMode {
    Pedestrian,
    Vehicle,
}

impl VolumeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            VolumeMode::Pedestrian => "pedestrian",
            VolumeMode::Vehicle => "vehicle",
        }
    }
}

/// Phase of a trajectory under the given mode, or `None` when it does not
/// belong to the mode or cannot be classified.
pub fn trajectory_phase(tr: &Trajectory, cfg: &IntersectionConfig, mode: VolumeMode) -> Option<Phase> {
    match mode {
        VolumeMode::Pedestrian if !tr.class.is_vehicle() => Some(cfg.pedestrian_phase(tr)),
        VolumeMode::Vehicle if tr.class.is_vehicle() => {
            cfg.classify_vehicle_movement(tr).map(|m| cfg.vehicle_phase(m))
        }
        _ => None,
    }
}

/// Phase × hour-of-day counts.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeMatrix {
    pub mode: VolumeMode,
    pub phases: Vec<Phase>,
    /// `counts[phase_row][hour]`.
    pub counts: Vec<[u64; 24]>,
}

impl VolumeMatrix {
    pub fn empty(mode: VolumeMode) -> Self {
        let phases = match mode {
            VolumeMode::Pedestrian => Phase::PEDESTRIAN.to_vec(),
            VolumeMode::Vehicle => Phase::VEHICLE.to_vec(),
        };
        let counts = vec![[0; 24]; phases.len()];
        VolumeMatrix { mode, phases, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flat_map(|r| r.iter()).sum()
    }

    pub fn hour_total(&self, hour: usize) -> u64 {
        self.counts.iter().map(|r| r[hour]).sum()
    }

    pub fn phase_total(&self, phase: Phase) -> u64 {
        self.phases.iter().position(|&p| p == phase).map_or(0, |i| self.counts[i].iter().sum())
    }

    /// Mean per-hour total over `hours`.
    pub fn mean_hourly(&self, hours: impl IntoIterator<Item = usize>) -> f64 {
        let v: Vec<f64> = hours.into_iter().map(|h| self.hour_total(h) as f64).collect();
        stats::mean(&v)
    }
}

/// Each classified trajectory counted once, in the hour containing its
/// middle sample.
pub fn volume_matrix(trajs: &[Trajectory], cfg: &IntersectionConfig, mode: VolumeMode) -> VolumeMatrix {
    let mut m = VolumeMatrix::empty(mode);
    for tr in trajs {
        let Some(phase) = trajectory_phase(tr, cfg, mode) else { continue };
        let Some(row) = m.phases.iter().position(|&p| p == phase) else { continue };
        let hour = libm::floor(tr.mid_time() / HOUR) as usize;
        if hour < 24 {
            m.counts[row][hour] += 1;
        }
    }
    m
}

/// Classified crossings whose middle sample lies in `[start − window, start)`.
pub fn pregame_volume(trajs: &[Trajectory], cfg: &IntersectionConfig, start: f64, window: f64, mode: VolumeMode) -> usize {
    trajs
        .iter()
        .filter(|tr| {
            let t = tr.mid_time();
            t >= start - window && t < start && trajectory_phase(tr, cfg, mode).is_some()
        })
        .count()
}

/// Conflict times of one day, tagged with the day's group.
#[derive(Debug, Clone, PartialEq)]
pub struct DayEvents {
    pub day: String,
    pub group: String,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub hour: u32,
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub group: String,
    pub n_days: usize,
    pub points: Vec<SeriesPoint>,
}

/// First and one-past-last hour of the aggregated series.
pub const AGGREGATE_HOURS: (u32, u32) = (7, 18);

/// Mean daily count per hour with a 95% Student-t band across days. Groups
/// listed in `groups` with no days are omitted and returned separately.
pub fn aggregate_conflicts(groups: &[String], days: &[DayEvents]) -> (Vec<AggregateSeries>, Vec<String>) {
    let mut by_group: BTreeMap<&str, Vec<&DayEvents>> = BTreeMap::new();
    for g in groups {
        by_group.entry(g.as_str()).or_default();
    }
    for d in days {
        by_group.entry(d.group.as_str()).or_default().push(d);
    }
    let mut out = Vec::new();
    let mut omitted = Vec::new();
    for (group, mut members) in by_group {
        if members.is_empty() {
            omitted.push(String::from(group));
            continue;
        }
        members.sort_by(|a, b| a.day.cmp(&b.day));
        let n = members.len();
        let tq = (n > 1).then(|| stats::student_t_quantile(0.975, n as f64 - 1.0));
        let points = (AGGREGATE_HOURS.0..AGGREGATE_HOURS.1)
            .map(|hour| {
                let counts: Vec<f64> = members
                    .iter()
                    .map(|d| d.times.iter().filter(|&&t| libm::floor(t / HOUR) as u32 == hour).count() as f64)
                    .collect();
                let mean = stats::mean(&counts);
                let half = tq.map_or(0.0, |q| q * libm::sqrt(stats::sample_variance(&counts) / n as f64));
                SeriesPoint { hour, mean, low: mean - half, high: mean + half }
            })
            .collect();
        out.push(AggregateSeries { group: String::from(group), n_days: n, points });
    }
    (out, omitted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialHistogram {
    pub mesh: MeshGrid,
    pub counts: Vec<u64>,
    /// Points outside the grid.
    pub overflow: u64,
}

impl SpatialHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }
}

pub fn spatial_histogram(points: &[Vec2], mesh: &MeshGrid) -> SpatialHistogram {
    let mut counts = vec![0u64; mesh.n_cells()];
    let mut overflow = 0;
    for &p in points {
        match mesh.cell_of(p) {
            Some(c) => counts[c] += 1,
            None => overflow += 1,
        }
    }
    SpatialHistogram { mesh: *mesh, counts, overflow }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Scott's rule for two dimensions: σ · n^(−1/6).
    Scott,
    Fixed(f64),
}

/// Scott's-rule bandwidth using the pooled coordinate standard deviation;
/// `None` when the points have no spread.
pub fn scott_bandwidth(points: &[Vec2]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let sigma = libm::sqrt(0.5 * (stats::sample_variance(&xs) + stats::sample_variance(&ys)));
    let h = sigma * libm::pow(points.len() as f64, -1.0 / 6.0);
    (h > 0.0).then_some(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySurface {
    pub mesh: MeshGrid,
    pub bandwidth: f64,
    /// Density (1/m²) at each cell center, row-major.
    pub values: Vec<f64>,
}

impl DensitySurface {
    /// Riemann sum of the surface over the mesh.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.mesh.cell_size * self.mesh.cell_size
    }

    /// Cell with the highest density.
    pub fn peak(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Isotropic Gaussian kernel density of the points, evaluated at cell
/// centers. Falls back to one cell size when Scott's rule is degenerate.
pub fn spatial_kde(points: &[Vec2], bandwidth: Bandwidth, mesh: &MeshGrid) -> Result<DensitySurface> {
    if points.is_empty() {
        return Err(Error::NoEvents);
    }
    let h = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(Error::Parameter(alloc::format!("bandwidth must be > 0, got {h}"))),
        Bandwidth::Scott => scott_bandwidth(points).unwrap_or(mesh.cell_size),
    };
    let norm = 1.0 / (points.len() as f64 * 2.0 * core::f64::consts::PI * h * h);
    let inv2h2 = 1.0 / (2.0 * h * h);
    let values = (0..mesh.n_cells())
        .map(|c| {
            let q = mesh.cell_center(c);
            norm * points.iter().map(|&p| libm::exp(-(q - p).norm_sq() * inv2h2)).sum::<f64>()
        })
        .collect();
    Ok(DensitySurface { mesh: *mesh, bandwidth: h, values })
}

/// `mesh` grown by `margin` meters on every side, keeping its cell size.
pub fn padded_mesh(mesh: &MeshGrid, margin: f64) -> MeshGrid {
    let k = libm::ceil(margin / mesh.cell_size) as usize;
    let pad = k as f64 * mesh.cell_size;
    MeshGrid {
        origin: Vec2::new(mesh.origin.x - pad, mesh.origin.y - pad),
        cell_size: mesh.cell_size,
        n_cols: mesh.n_cols + 2 * k,
        n_rows: mesh.n_rows + 2 * k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilitySide {
    Away,
    Home,
}

/// Pregame volume and win probabilities of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameVolume {
    pub label: String,
    pub volume: f64,
    pub home_win_prob: f64,
    pub away_win_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub p: PValue,
    pub n: usize,
    /// (normalized probability, normalized volume, label), ordered by
    /// probability.
    pub plot: Vec<(f64, f64, String)>,
}

/// Correlate min-max normalized volume with normalized win probability.
pub fn correlate_volume_win_prob(games: &[GameVolume], side: ProbabilitySide, method: PValueMethod) -> Result<Correlation> {
    if games.len() < 3 {
        return Err(Error::TooFewValues { needed: 3, got: games.len() });
    }
    let probs: Vec<f64> = games
        .iter()
        .map(|g| match side {
            ProbabilitySide::Away => g.away_win_prob,
            ProbabilitySide::Home => g.home_win_prob,
        })
        .collect();
    let vols: Vec<f64> = games.iter().map(|g| g.volume).collect();
    let np = stats::min_max_normalize(&probs)?;
    let nv = stats::min_max_normalize(&vols)?;
    let r = stats::pearson_r(&np, &nv)?;
    let p = stats::p_value(&np, &nv, method)?;
    let mut plot: Vec<(f64, f64, String)> =
        np.iter().zip(&nv).zip(games).map(|((&a, &b), g)| (a, b, g.label.clone())).collect();
    plot.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.cmp(&b.2)));
    Ok(Correlation { r, p, n: games.len(), plot })
}
