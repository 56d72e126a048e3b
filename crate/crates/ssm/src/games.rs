//! Football game metadata: a small HTTP client with an on-disk cache and a
//! built-in fixture table.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveTime, Timelike, Utc};
use chrono_tz::America::New_York;
use serde::{Deserialize, Serialize};
use ssm_core::game::GameRecord;

use crate::error::{AppError, Category, Result};

pub const FIXTURE_CSV: &str = include_str!("../data/games_fixture.csv");
pub const API_KEY_VAR: &str = "CFB_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum GameSource {
    Http,
    #[default]
    Fixture,
}

#[derive(Debug, Deserialize)]
struct FixtureRow {
    #[serde(rename = "Matchup")]
    matchup: String,
    #[serde(rename = "Date")]
    date: NaiveDate,
    #[serde(rename = "Start Time")]
    start: String,
    #[serde(rename = "Attendance")]
    attendance: u32,
    #[serde(rename = "Excitement Index")]
    excitement: f64,
    #[serde(rename = "Home Team Win Probability")]
    home_prob: f64,
}

/// Parse a fixture table keyed by date.
pub fn parse_fixture(text: &str) -> Result<BTreeMap<NaiveDate, GameRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, row) in rdr.deserialize::<FixtureRow>().enumerate() {
        let row = row.map_err(|e| AppError::data(format!("game fixture row {}: {e}", i + 2)))?;
        let start = NaiveTime::parse_from_str(&row.start, "%H:%M")
            .map_err(|e| AppError::data(format!("game fixture row {}: start time {:?}: {e}", i + 2, row.start)))?;
        let rec = GameRecord::new(row.matchup, row.date, start, row.attendance, row.excitement, row.home_prob)?;
        if out.insert(row.date, rec).is_some() {
            return Err(AppError::data(format!("game fixture has two games on {}", row.date)));
        }
    }
    Ok(out)
}

pub fn builtin_fixture() -> BTreeMap<NaiveDate, GameRecord> {
    parse_fixture(FIXTURE_CSV).expect("built-in fixture parses")
}

#[derive(Debug, Deserialize)]
struct ApiGame {
    id: u64,
    #[serde(rename = "startDate", alias = "start_date")]
    start_date: String,
    #[serde(rename = "homeTeam", alias = "home_team")]
    home_team: String,
    #[serde(rename = "awayTeam", alias = "away_team")]
    away_team: String,
    #[serde(default)]
    attendance: Option<u32>,
    #[serde(rename = "excitementIndex", alias = "excitement_index", default)]
    excitement_index: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ApiPregame {
    #[serde(rename = "gameId", alias = "game_id")]
    game_id: u64,
    #[serde(rename = "homeWinProbability", alias = "home_win_prob")]
    home_win_prob: f64,
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn excerpt(body: &str) -> String {
    let mut s: String = body.chars().take(200).collect();
    if s.len() < body.len() {
        s.push('…');
    }
    s
}

fn malformed(what: &str, body: &str, err: impl std::fmt::Display) -> AppError {
    AppError::data(format!("malformed {what} payload ({err}); body starts: {}", excerpt(body)))
}

/// Pick the game played on `date` (local time) out of a season listing and
/// attach its pregame home win probability.
pub fn resolve_game(date: NaiveDate, games_body: &str, pregame_body: &str) -> Result<Option<GameRecord>> {
    let games: Vec<ApiGame> = serde_json::from_str(games_body).map_err(|e| malformed("games", games_body, e))?;
    let mut found = None;
    for g in games {
        let utc: DateTime<Utc> = DateTime::parse_from_rfc3339(&g.start_date)
            .map_err(|e| malformed("games", games_body, format!("start date {:?}: {e}", g.start_date)))?
            .with_timezone(&Utc);
        let local = utc.with_timezone(&New_York);
        if local.date_naive() == date {
            found = Some((g, local.time()));
            break;
        }
    }
    let Some((g, start)) = found else { return Ok(None) };
    let pregame: Vec<ApiPregame> = serde_json::from_str(pregame_body).map_err(|e| malformed("pregame", pregame_body, e))?;
    let prob = pregame
        .iter()
        .find(|p| p.game_id == g.id)
        .map(|p| p.home_win_prob)
        .ok_or_else(|| malformed("pregame", pregame_body, format!("no win probability for game {}", g.id)))?;
    let start = NaiveTime::from_hms_opt(start.hour(), start.minute(), 0).expect("valid time");
    let rec = GameRecord::new(
        format!("{} @ {}", g.away_team, g.home_team),
        date,
        start,
        g.attendance.unwrap_or(0),
        round3(g.excitement_index.unwrap_or(f64::NAN)),
        round3(prob),
    )
    .map_err(|e| malformed("games", games_body, e))?;
    Ok(Some(rec))
}

/// Game lookups by date from either the fixture table or the HTTP API.
#[derive(Debug, Clone)]
pub struct GamesClient {
    pub source: GameSource,
    pub endpoint: String,
    pub team: String,
    pub cache_dir: Option<PathBuf>,
    pub api_key: Option<String>,
    fixture: BTreeMap<NaiveDate, GameRecord>,
}

impl GamesClient {
    pub fn fixture() -> Self {
        GamesClient {
            source: GameSource::Fixture,
            endpoint: String::new(),
            team: "Florida".into(),
            cache_dir: None,
            api_key: None,
            fixture: builtin_fixture(),
        }
    }

    pub fn from_config(cfg: &crate::config::GamesConfig, source: GameSource) -> Result<Self> {
        let fixture = match &cfg.fixture {
            Some(p) => parse_fixture(&std::fs::read_to_string(p).map_err(|e| AppError::io(Category::Config, p, e))?)?,
            None => builtin_fixture(),
        };
        Ok(GamesClient {
            source,
            endpoint: cfg.endpoint.trim_end_matches('/').to_string(),
            team: cfg.team.clone(),
            cache_dir: cfg.cache_dir.clone(),
            api_key: std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
            fixture,
        })
    }

    pub fn fetch_game(&self, date: NaiveDate) -> Result<Option<GameRecord>> {
        match self.source {
            GameSource::Fixture => Ok(self.fixture.get(&date).cloned()),
            GameSource::Http => self.fetch_http(date),
        }
    }

    fn cache_path(&self, date: NaiveDate) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("{date}.json")))
    }

    fn read_cache(&self, date: NaiveDate) -> Result<Option<Option<GameRecord>>> {
        let Some(path) = self.cache_path(date) else { return Ok(None) };
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| AppError::data(format!("corrupt cache entry {}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(AppError::io(Category::Data, &path, e)),
        }
    }

    fn write_cache(&self, date: NaiveDate, rec: &Option<GameRecord>) -> Result<()> {
        let Some(path) = self.cache_path(date) else { return Ok(()) };
        let dir = path.parent().unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(Category::Data, dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| AppError::io(Category::Data, dir, e))?;
        let body = serde_json::to_string_pretty(rec).expect("serializable");
        tmp.write_all(body.as_bytes()).map_err(|e| AppError::io(Category::Data, &path, e))?;
        tmp.persist(&path).map_err(|e| AppError::io(Category::Data, &path, e.error))?;
        Ok(())
    }

    fn get(&self, url: &str, key: &str) -> std::result::Result<String, String> {
        let mut resp = ureq::get(url)
            .header("Authorization", &format!("Bearer {key}"))
            .header("Accept", "application/json")
            .call()
            .map_err(|e| e.to_string())?;
        resp.body_mut().read_to_string().map_err(|e| e.to_string())
    }

    fn fetch_http(&self, date: NaiveDate) -> Result<Option<GameRecord>> {
        if let Some(hit) = self.read_cache(date)? {
            return Ok(hit);
        }
        let Some(key) = self.api_key.as_deref() else {
            return Err(AppError::config(format!("{API_KEY_VAR} is not set and {date} is not cached")));
        };
        let year = chrono::Datelike::year(&date);
        let games_url = format!("{}/games?year={year}&team={}", self.endpoint, self.team);
        let pregame_url = format!("{}/metrics/wp/pregame?year={year}&team={}", self.endpoint, self.team);
        let bodies = self.get(&games_url, key).and_then(|g| self.get(&pregame_url, key).map(|p| (g, p)));
        match bodies {
            Ok((games, pregame)) => {
                let rec = resolve_game(date, &games, &pregame)?;
                self.write_cache(date, &rec)?;
                Ok(rec)
            }
            Err(net) => match self.fixture.get(&date) {
                Some(rec) => Ok(Some(rec.clone())),
                None => Err(AppError::data(format!("game lookup for {date} failed ({net}) and no fixture entry exists"))),
            },
        }
    }
}
