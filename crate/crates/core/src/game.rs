//! Football game metadata and derived game-time quantities.

use alloc::string::String;
use chrono::{NaiveDate, NaiveTime, TimeDelta};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average length of an FBS game: 3 h 22 min.
pub const AVERAGE_GAME_MINUTES: i64 = 202;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub matchup: String,
    pub date: NaiveDate,
    /// Local kickoff time.
    pub start_time: NaiveTime,
    pub attendance: u32,
    pub excitement_index: f64,
    pub home_win_prob: f64,
    pub away_win_prob: f64,
}

impl GameRecord {
    /// Build a record, deriving the away probability as the complement of the
    /// home probability.
    pub fn new(
        matchup: String,
        date: NaiveDate,
        start_time: NaiveTime,
        attendance: u32,
        excitement_index: f64,
        home_win_prob: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&home_win_prob) {
            return Err(Error::Parameter(alloc::format!("home_win_prob {home_win_prob} outside [0, 1]")));
        }
        if !excitement_index.is_finite() {
            return Err(Error::Parameter("excitement_index must be finite".into()));
        }
        Ok(GameRecord {
            matchup,
            date,
            start_time,
            attendance,
            excitement_index,
            home_win_prob,
            away_win_prob: 1.0 - home_win_prob,
        })
    }

    /// Kickoff as seconds since local midnight.
    pub fn start_seconds(&self) -> f64 {
        f64::from(chrono::Timelike::num_seconds_from_midnight(&self.start_time))
    }

    pub fn estimated_end(&self) -> NaiveTime {
        estimated_end(self.start_time)
    }
}

/// Kickoff plus the average game length (wraps past midnight).
pub fn estimated_end(start: NaiveTime) -> NaiveTime {
    start.overflowing_add_signed(TimeDelta::minutes(AVERAGE_GAME_MINUTES)).0
}
