//! Run configuration: intersection geometry, day inputs and parameters.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use ssm_core::kinematics::VelocityOptions;
use ssm_core::pet::PetParams;
use ssm_core::stats::PValueMethod;
use ssm_core::ttc::TtcParams;
use ssm_core::IntersectionConfig;

use crate::error::{AppError, Category, Result};
use crate::games::GameSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaySpec {
    /// Unique label used in artifact names.
    pub label: String,
    pub date: NaiveDate,
    #[serde(default)]
    pub gameday: bool,
    /// Grouping label for aggregation; defaults to e.g. "Saturday-gameday".
    #[serde(default)]
    pub group: Option<String>,
    pub trajectories: PathBuf,
    #[serde(default)]
    pub signal_log: Option<PathBuf>,
}

impl DaySpec {
    pub fn group_label(&self) -> String {
        self.group.clone().unwrap_or_else(|| {
            let weekday = match self.date.weekday() {
                chrono::Weekday::Mon => "Monday",
                chrono::Weekday::Tue => "Tuesday",
                chrono::Weekday::Wed => "Wednesday",
                chrono::Weekday::Thu => "Thursday",
                chrono::Weekday::Fri => "Friday",
                chrono::Weekday::Sat => "Saturday",
                chrono::Weekday::Sun => "Sunday",
            };
            format!("{weekday}-{}", if self.gameday { "gameday" } else { "non-gameday" })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PValueChoice {
    #[default]
    TDist,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub ttc: TtcParams,
    pub pet: PetParams,
    /// Seconds of don't-walk overlap tolerated before a crossing is flagged.
    pub t_grace: f64,
    /// Overwrite velocities present in the input.
    pub recompute_velocities: bool,
    pub smoothing_window: Option<usize>,
    /// Fixed KDE bandwidth in meters; Scott's rule when absent.
    pub kde_bandwidth: Option<f64>,
    pub kde_padding: f64,
    pub pregame_window_hours: f64,
    pub p_value: PValueChoice,
    pub permutation_draws: u64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            ttc: TtcParams::default(),
            pet: PetParams::default(),
            t_grace: 1.0,
            recompute_velocities: false,
            smoothing_window: None,
            kde_bandwidth: None,
            kde_padding: 10.0,
            pregame_window_hours: 6.0,
            p_value: PValueChoice::TDist,
            permutation_draws: 100_000,
            seed: 0x5eed,
        }
    }
}

impl Params {
    pub fn velocity_options(&self) -> VelocityOptions {
        VelocityOptions { recompute: self.recompute_velocities, smoothing_window: self.smoothing_window }
    }

    pub fn p_value_method(&self) -> PValueMethod {
        match self.p_value {
            PValueChoice::TDist => PValueMethod::TDist,
            PValueChoice::Permutation => PValueMethod::Permutation { draws: self.permutation_draws, seed: self.seed },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ttc.validate()?;
        let p = &self.pet;
        if !(p.pet_window > 0.0 && p.pet_severe >= 0.0 && p.episode_gap >= 0.0) {
            return Err(AppError::config("PET window must be > 0 and thresholds ≥ 0"));
        }
        if !(self.t_grace >= 0.0) {
            return Err(AppError::config("t_grace must be ≥ 0"));
        }
        if let Some(w) = self.smoothing_window {
            if w == 0 || w % 2 == 0 {
                return Err(AppError::config(format!("smoothing_window must be odd, got {w}")));
            }
        }
        if self.kde_bandwidth.is_some_and(|h| !(h > 0.0)) {
            return Err(AppError::config("kde_bandwidth must be > 0"));
        }
        if !(self.pregame_window_hours > 0.0) {
            return Err(AppError::config("pregame_window_hours must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GamesConfig {
    pub source: GameSource,
    /// Base URL of the games API.
    pub endpoint: String,
    pub team: String,
    pub cache_dir: Option<PathBuf>,
    /// Replacement for the built-in fixture file.
    pub fixture: Option<PathBuf>,
}

impl Default for GamesConfig {
    fn default() -> Self {
        GamesConfig {
            source: GameSource::Fixture,
            endpoint: "https://api.collegefootballdata.com".into(),
            team: "Florida".into(),
            cache_dir: None,
            fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub intersection: PathBuf,
    pub days: Vec<DaySpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub games: GamesConfig,
}

impl RunConfig {
    /// Read a config file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(Category::Config, path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.intersection);
        for d in &mut self.days {
            fix(&mut d.trajectories);
            if let Some(s) = d.signal_log.as_mut() {
                fix(s);
            }
        }
        if let Some(c) = self.games.cache_dir.as_mut() {
            fix(c);
        }
        if let Some(f) = self.games.fixture.as_mut() {
            fix(f);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let mut labels = BTreeSet::new();
        let mut dates = BTreeSet::new();
        for d in &self.days {
            if !labels.insert(&d.label) {
                return Err(AppError::config(format!("duplicate day label {:?}", d.label)));
            }
            if !dates.insert(d.date) {
                return Err(AppError::config(format!("more than one day labelled for {}", d.date)));
            }
            if d.label.is_empty() || !d.label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(AppError::config(format!("day label {:?} must be non-empty [A-Za-z0-9._-]", d.label)));
            }
        }
        let mut paths = vec![&self.intersection];
        for d in &self.days {
            paths.push(&d.trajectories);
            paths.extend(d.signal_log.as_ref());
        }
        paths.extend(self.games.fixture.as_ref());
        for p in paths {
            if !p.is_file() {
                return Err(AppError::config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Days selected by label; all days when `only` is empty.
    pub fn select_days(&self, only: &[String]) -> Result<Vec<DaySpec>> {
        if only.is_empty() {
            return Ok(self.days.clone());
        }
        only.iter()
            .map(|l| {
                self.days.iter().find(|d| &d.label == l).cloned().ok_or_else(|| AppError::config(format!("unknown day label {l:?}")))
            })
            .collect()
    }
}

pub fn load_intersection(path: &Path) -> Result<IntersectionConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(Category::Config, path, e))?;
    let cfg: IntersectionConfig = serde_json::from_str(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
    Ok(cfg.validate()?)
}
