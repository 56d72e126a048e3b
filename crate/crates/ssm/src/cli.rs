//! Command-line front end. Each subcommand loads its inputs, computes, and
//! hands the artifacts to [`Output::commit`] in one step.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssm_core::analytics::{
    aggregate_conflicts, padded_mesh, pregame_volume, spatial_histogram, spatial_kde, volume_matrix, Bandwidth,
    DayEvents, GameVolume, ProbabilitySide, HOUR,
};
use ssm_core::classify::{jaywalk_movement_histogram, movement_histogram, movement_label, type_counts};
use ssm_core::game::GameRecord;
use ssm_core::pet::build_mesh;
use ssm_core::{ConflictEvent, ConflictKind, IntersectionConfig, Metric, ObjectClass, Vec2};

use crate::config::{load_intersection, DaySpec, PValueChoice, Params, RunConfig};
use crate::error::{AppError, Category, Result};
use crate::export::{self, Marker};
use crate::games::{GameSource, GamesClient};
use crate::io::{write_rejected, write_signal_log, write_trajectories};
use crate::output::{sha256_hex, FileHash, Manifest, Output};
use crate::pipeline::{detect_day, load_day, LoadedDay, MetricChoice, ModeChoice};
use crate::synth::{self, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(name = "ssm", version, about = "Surrogate safety measures for a signalized intersection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum SideChoice {
    #[default]
    Away,
    Home,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PValueFlag {
    TDist,
    Permutation,
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// Run configuration (JSON). For `synth`, a scenario spec instead.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; replaced atomically on success.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated day labels (default: all configured days).
    #[arg(long, global = true, value_delimiter = ',')]
    pub days: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = ModeChoice::Pedestrian)]
    pub mode: ModeChoice,
    #[arg(long, global = true, value_enum, default_value_t = MetricChoice::Both)]
    pub metric: MetricChoice,
    /// Overrides `games.source` from the config.
    #[arg(long, global = true, value_enum)]
    pub game_source: Option<GameSource>,
    /// Also render SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Scenario seed for `synth`, permutation-test seed otherwise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Win probability side to correlate against.
    #[arg(long, global = true, value_enum, default_value_t = SideChoice::Away)]
    pub side: SideChoice,
    /// Overrides `params.p_value` from the config.
    #[arg(long, global = true, value_enum)]
    pub p_value: Option<PValueFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Validate trajectories and signal logs and fill in velocities.
    Ingest,
    /// Detect and classify TTC/PET conflicts.
    Conflicts,
    /// Phase × hour volume matrices.
    Volumes,
    /// Hourly conflict means with confidence bands per day group.
    Aggregate,
    /// Conflict location histogram and density surface.
    Spatial,
    /// Correlate pregame volume with win probability.
    Correlate,
    /// Generate a synthetic scenario with ground truth.
    Synth,
    /// Summary document with per-day conflict averages.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Conflicts => "conflicts",
            Command::Volumes => "volumes",
            Command::Aggregate => "aggregate",
            Command::Spatial => "spatial",
            Command::Correlate => "correlate",
            Command::Synth => "synth",
            Command::Report => "report",
        }
    }
}

/// Result of a successful run.
#[derive(Debug)]
pub struct RunOutcome {
    pub out: PathBuf,
    pub manifest: Manifest,
    /// Lines for standard output.
    pub stdout: String,
}

pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let out = cli.opts.out.clone().ok_or_else(|| AppError::config("--out is required"))?;
    crate::output::check_target(&out)?;
    let mut manifest = Manifest::new(cli.command.name());
    record_options(&mut manifest, cli.command, &cli.opts);
    let mut output = Output::new();
    let stdout = match cli.command {
        Command::Synth => cmd_synth(&cli.opts, &mut manifest, &mut output)?,
        cmd => {
            let ctx = Ctx::load(&cli.opts, &mut manifest)?;
            match cmd {
                Command::Ingest => cmd_ingest(&ctx, &mut output)?,
                Command::Conflicts => cmd_conflicts(&ctx, &mut output)?,
                Command::Volumes => cmd_volumes(&ctx, &mut output)?,
                Command::Aggregate => cmd_aggregate(&ctx, &mut output)?,
                Command::Spatial => cmd_spatial(&ctx, &mut output)?,
                Command::Correlate => cmd_correlate(&ctx, &mut output)?,
                Command::Report => cmd_report(&ctx, &mut output)?,
                Command::Synth => unreachable!(),
            }
        }
    };
    let manifest = output.commit(&out, manifest)?;
    Ok(RunOutcome { out, manifest, stdout })
}

fn record_options(m: &mut Manifest, cmd: Command, o: &Opts) {
    m.option("days", &o.days);
    m.option("svg", o.svg);
    m.option("seed", o.seed);
    if cmd != Command::Synth {
        m.option("mode", o.mode.as_str());
        m.option("metric", o.metric.as_str());
    }
    if cmd == Command::Correlate {
        m.option("side", format!("{:?}", o.side).to_lowercase());
        m.option("game_source", o.game_source.map(|s| format!("{s:?}").to_lowercase()));
        m.option("p_value", o.p_value.map(|p| format!("{p:?}").to_lowercase()));
    }
}

/// `p` shown relative to `base` with forward slashes, so manifests do not
/// depend on where the inputs live.
fn shown(base: &Path, p: &Path) -> String {
    let rel = p.strip_prefix(base).unwrap_or(p);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

fn config_hash(path: &Path) -> Result<FileHash> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(Category::Config, path, e))?;
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(FileHash { path: name, sha256: sha256_hex(&bytes) })
}

struct Ctx {
    run: RunConfig,
    intersection: IntersectionConfig,
    days: Vec<DaySpec>,
    params: Params,
    opts: Opts,
}

impl Ctx {
    fn load(opts: &Opts, manifest: &mut Manifest) -> Result<Ctx> {
        let path = opts.config.as_deref().ok_or_else(|| AppError::config("--config is required"))?;
        let run = RunConfig::load(path)?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let intersection = load_intersection(&run.intersection)?;
        let days = run.select_days(&opts.days)?;
        if days.is_empty() {
            return Err(AppError::config("no days selected"));
        }
        let mut params = run.params.clone();
        if let Some(seed) = opts.seed {
            params.seed = seed;
        }
        if let Some(p) = opts.p_value {
            params.p_value = match p {
                PValueFlag::TDist => PValueChoice::TDist,
                PValueFlag::Permutation => PValueChoice::Permutation,
            };
        }
        params.validate()?;

        manifest.config = Some(config_hash(path)?);
        manifest.input(&shown(&base, &run.intersection), &run.intersection)?;
        for d in &days {
            manifest.input(&shown(&base, &d.trajectories), &d.trajectories)?;
            if let Some(s) = &d.signal_log {
                manifest.input(&shown(&base, s), s)?;
            }
        }
        manifest.params = serde_json::to_value(&params).expect("params serialize");
        Ok(Ctx { run, intersection, days, params, opts: opts.clone() })
    }

    fn load_days(&self) -> Result<Vec<LoadedDay>> {
        self.days.iter().map(|d| load_day(d, &self.params)).collect()
    }

    fn detect_all(&self, days: &[LoadedDay]) -> Result<Vec<Vec<ConflictEvent>>> {
        days.iter().map(|d| detect_day(d, &self.intersection, &self.params, self.opts.metric)).collect()
    }

    fn games(&self) -> Result<GamesClient> {
        let source = self.opts.game_source.unwrap_or(self.run.games.source);
        GamesClient::from_config(&self.run.games, source)
    }

    /// Events of the kind studied in the current mode.
    fn of_mode<'a>(&self, events: &'a [ConflictEvent]) -> impl Iterator<Item = &'a ConflictEvent> + use<'a> {
        let kind = self.opts.mode.kind();
        events.iter().filter(move |e| e.kind == kind)
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn fmt_hhmm(t: f64) -> String {
    let m = (t / 60.0).floor() as i64;
    format!("{:02}:{:02}", m / 60, m % 60)
}

fn phase_table_md(cfg: &IntersectionConfig) -> String {
    let table = cfg.phase_table();
    let mut s = String::from("| movement | phase |\n|---|---|\n");
    for (m, p) in &table.vehicle {
        writeln!(s, "| {m} | {} |", p.number()).unwrap();
    }
    s.push_str("\n| crosswalk | pedestrian phase |\n|---|---|\n");
    for (l, p) in &table.pedestrian {
        writeln!(s, "| {l} | {} |", p.number()).unwrap();
    }
    s
}

// ---------------------------------------------------------------- ingest

fn cmd_ingest(ctx: &Ctx, out: &mut Output) -> Result<String> {
    let days = ctx.load_days()?;
    let mut summary = String::from(
        "day,date,group,rows,accepted_rows,rejected_rows,trajectories,pedestrians,vehicles,unclassified_vehicles,signal_intervals,signal_rejected\n",
    );
    let mut stdout = String::new();
    for d in &days {
        let label = &d.spec.label;
        out.add(format!("ingest/{label}/trajectories.csv"), csv_bytes(|b| write_trajectories(b, &d.trajectories)));
        out.add(format!("ingest/{label}/rejected.csv"), csv_bytes(|b| write_rejected(b, &d.rejected)));
        if let Some(log) = &d.signal_log {
            out.add(format!("ingest/{label}/signal_log.csv"), csv_bytes(|b| write_signal_log(b, log)));
            out.add(format!("ingest/{label}/signal_rejected.csv"), csv_bytes(|b| write_rejected(b, &d.signal_rejected)));
        }
        let peds = d.trajectories.iter().filter(|t| t.class == ObjectClass::Pedestrian).count();
        let vehicles = d.trajectories.len() - peds;
        let unclassified = d
            .trajectories
            .iter()
            .filter(|t| t.class.is_vehicle() && ctx.intersection.classify_vehicle_movement(t).is_none())
            .count();
        let accepted: usize = d.trajectories.iter().map(|t| t.len()).sum();
        writeln!(
            summary,
            "{label},{},{},{},{accepted},{},{},{peds},{vehicles},{unclassified},{},{}",
            d.spec.date,
            d.group(),
            d.rows,
            d.rejected.len(),
            d.trajectories.len(),
            d.signal_log.as_ref().map_or(0, |l| l.len()),
            d.signal_rejected.len()
        )
        .unwrap();
        writeln!(stdout, "{label}: {} trajectories, {} rows rejected", d.trajectories.len(), d.rejected.len()).unwrap();
    }
    out.add("ingest_summary.csv", summary);
    out.add("config_report.md", format!("# Intersection phases\n\n{}", phase_table_md(&ctx.intersection)));
    Ok(stdout)
}

// ---------------------------------------------------------------- conflicts

fn cmd_conflicts(ctx: &Ctx, out: &mut Output) -> Result<String> {
    let days = ctx.load_days()?;
    let events = ctx.detect_all(&days)?;
    let mut summary = String::from("day,group,total,p2v,v2v,ttc,pet,severe,jaywalk,untyped_p2v,unclassified_movement\n");
    let mut stdout = String::new();
    for (d, ev) in days.iter().zip(&events) {
        out.add(format!("events/{}.csv", d.spec.label), export::events_csv(ev));
        let count = |f: &dyn Fn(&ConflictEvent) -> bool| ev.iter().filter(|e| f(e)).count();
        let p2v = count(&|e| e.kind == ConflictKind::P2V);
        writeln!(
            summary,
            "{},{},{},{p2v},{},{},{},{},{},{},{}",
            d.spec.label,
            d.group(),
            ev.len(),
            ev.len() - p2v,
            count(&|e| e.metric == Metric::Ttc),
            count(&|e| e.metric == Metric::Pet),
            count(&|e| e.severe),
            count(&|e| e.jaywalk),
            count(&|e| e.kind == ConflictKind::P2V && e.p2v_type.is_none()),
            count(&|e| e.vehicle().is_some() && e.movement.is_none()),
        )
        .unwrap();
        writeln!(stdout, "{}: {} events ({p2v} P2V)", d.spec.label, ev.len()).unwrap();
    }
    let all: Vec<ConflictEvent> = events.into_iter().flatten().collect();
    out.add("summary.csv", summary);
    out.add(
        "p2v_types.csv",
        export::counts_csv(["p2v_type", "count"], type_counts(&all).into_iter().map(|(t, n)| (t.to_string(), n))),
    );
    out.add("movements.csv", export::movement_counts_csv(&movement_histogram(&all)));
    out.add("jaywalk_movements.csv", export::movement_counts_csv(&jaywalk_movement_histogram(&all)));
    Ok(stdout)
}

// ---------------------------------------------------------------- volumes

/// Kickoff and estimated end markers for a gameday; the end marker is left
/// out when it falls after the last observation.
fn game_markers(game: &GameRecord, data_end: f64) -> Vec<Marker> {
    let start = game.start_seconds();
    let mut markers = vec![Marker { hour: start / HOUR, label: format!("kickoff {}", game.start_time.format("%H:%M")) }];
    let end = game.estimated_end();
    let end_s = f64::from(chrono::Timelike::num_seconds_from_midnight(&end));
    if end_s > start && end_s <= data_end {
        markers.push(Marker { hour: end_s / HOUR, label: format!("end {}", end.format("%H:%M")) });
    }
    markers
}

fn cmd_volumes(ctx: &Ctx, out: &mut Output) -> Result<String> {
    let days = ctx.load_days()?;
    let mode = ctx.opts.mode;
    let games = if ctx.opts.svg { Some(ctx.games()?) } else { None };
    let mut summary = String::from("day,group,mode,total,peak_hour,peak_count\n");
    let mut stdout = String::new();
    for d in &days {
        let m = volume_matrix(&d.trajectories, &ctx.intersection, mode.volume_mode());
        let label = &d.spec.label;
        out.add(format!("volumes/{label}_{}.csv", mode.as_str()), export::volume_csv(&m));
        let (peak_hour, peak) = (0..24).map(|h| (h, m.hour_total(h))).max_by_key(|&(h, n)| (n, std::cmp::Reverse(h))).unwrap();
        writeln!(summary, "{label},{},{},{},{peak_hour},{peak}", d.group(), mode.as_str(), m.total()).unwrap();
        writeln!(stdout, "{label}: {} {} crossings", m.total(), mode.as_str()).unwrap();
        if let Some(client) = &games {
            let data_end = d.trajectories.iter().filter_map(|t| t.samples().last().map(|s| s.t)).fold(0.0, f64::max);
            let markers = match d.spec.gameday {
                true => client.fetch_game(d.spec.date)?.map(|g| game_markers(&g, data_end)).unwrap_or_default(),
                false => Vec::new(),
            };
            let title = format!("{label} {} volume", mode.as_str());
            out.add(format!("volumes/{label}_{}.svg", mode.as_str()), export::volume_svg(&m, &title, &markers));
        }
    }
    out.add("volumes_summary.csv", summary);
    Ok(stdout)
}

// ---------------------------------------------------------------- aggregate

fn day_events(ctx: &Ctx, days: &[LoadedDay], events: &[Vec<ConflictEvent>]) -> Vec<DayEvents> {
    days.iter()
        .zip(events)
        .map(|(d, ev)| DayEvents { day: d.spec.label.clone(), group: d.group(), times: ctx.of_mode(ev).map(|e| e.t).collect() })
        .collect()
}

fn cmd_aggregate(ctx: &Ctx, out: &mut Output) -> Result<String> {
    let days = ctx.load_days()?;
    let events = ctx.detect_all(&days)?;
    let groups: Vec<String> = days.iter().map(LoadedDay::group).collect();
    let (series, omitted) = aggregate_conflicts(&groups, &day_events(ctx, &days, &events));
    let mut stdout = String::new();
    for g in &omitted {
        writeln!(stdout, "warning: group {g} has no days and was omitted").unwrap();
    }
    for s in &series {
        let total: f64 = s.points.iter().map(|p| p.mean).sum();
        writeln!(stdout, "{}: {} days, {total:.2} {} conflicts per day 07-18", s.group, s.n_days, ctx.opts.mode.kind()).unwrap();
    }
    out.add("aggregate.csv", export::aggregate_csv(&series));
    if ctx.opts.svg {
        let title = format!("{} conflicts per hour", ctx.opts.mode.kind());
        out.add("aggregate.svg", export::aggregate_svg(&series, &title));
    }
    Ok(stdout)
}

// ---------------------------------------------------------------- spatial

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn cmd_spatial(ctx: &Ctx, out: &mut Output) -> Result<String> {
    let days = ctx.load_days()?;
    let events = ctx.detect_all(&days)?;
    let mesh = build_mesh(&ctx.intersection)?;
    let eval = padded_mesh(&mesh, ctx.params.kde_padding);
    let bandwidth = ctx.params.kde_bandwidth.map_or(Bandwidth::Scott, Bandwidth::Fixed);

    let mut by_group: BTreeMap<String, Vec<Vec2>> = BTreeMap::new();
    for (d, ev) in days.iter().zip(&events) {
        by_group.entry(d.group()).or_default().extend(ctx.of_mode(ev).map(|e| e.location));
    }
    if by_group.values().all(Vec::is_empty) {
        return Err(ssm_core::Error::NoEvents.into());
    }
    let mut summary = String::from("group,events,in_grid,overflow,bandwidth,kde_integral\n");
    let mut stdout = String::new();
    for (group, points) in &by_group {
        let name = file_safe(group);
        let hist = spatial_histogram(points, &mesh);
        out.add(format!("spatial/{name}_histogram.csv"), export::histogram_csv(&hist));
        let in_grid = hist.total() - hist.overflow;
        if points.is_empty() {
            writeln!(summary, "{group},0,0,0,,").unwrap();
            writeln!(stdout, "{group}: no events, density skipped").unwrap();
            continue;
        }
        let kde = spatial_kde(points, bandwidth, &eval)?;
        out.add(format!("spatial/{name}_kde.csv"), export::kde_csv(&kde));
        if ctx.opts.svg {
            let counts: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
            out.add(format!("spatial/{name}_histogram.svg"), export::grid_svg(&mesh, &counts, &format!("{group} conflict counts")));
            out.add(format!("spatial/{name}_kde.svg"), export::grid_svg(&eval, &kde.values, &format!("{group} conflict density")));
        }
        writeln!(summary, "{group},{},{in_grid},{},{:.4},{:.4}", points.len(), hist.overflow, kde.bandwidth, kde.integral()).unwrap();
        if hist.overflow > 0 {
            writeln!(stdout, "{group}: {} events outside the grid", hist.overflow).unwrap();
        }
        writeln!(stdout, "{group}: {} events, bandwidth {:.2} m", points.len(), kde.bandwidth).unwrap();
    }
    out.add("spatial_summary.csv", summary);
    Ok(stdout)
}

// ---------------------------------------------------------------- correlate

fn cmd_correlate(ctx: &Ctx, out: &mut Output) -> Result<String> {
    let client = ctx.games()?;
    let gamedays: Vec<&DaySpec> = ctx.days.iter().filter(|d| d.gameday).collect();
    if gamedays.len() < 3 {
        return Err(AppError::config(format!("correlation needs at least 3 gamedays, {} selected", gamedays.len())));
    }
    let window = ctx.params.pregame_window_hours * HOUR;
    let mut games = Vec::new();
    let mut table = String::from("day,date,matchup,start_time,attendance,excitement_index,home_win_prob,away_win_prob,volume\n");
    for d in gamedays {
        let game = client
            .fetch_game(d.date)?
            .ok_or_else(|| AppError::data(format!("no game record for gameday {} ({})", d.label, d.date)))?;
        let day = load_day(d, &ctx.params)?;
        let volume =
            pregame_volume(&day.trajectories, &ctx.intersection, game.start_seconds(), window, ctx.opts.mode.volume_mode());
        writeln!(
            table,
            "{},{},{},{},{},{:.3},{:.3},{:.3},{volume}",
            d.label,
            d.date,
            game.matchup,
            game.start_time.format("%H:%M"),
            game.attendance,
            game.excitement_index,
            game.home_win_prob,
            game.away_win_prob
        )
        .unwrap();
        games.push(GameVolume {
            label: d.label.clone(),
            volume: volume as f64,
            home_win_prob: game.home_win_prob,
            away_win_prob: game.away_win_prob,
        });
    }
    let side = match ctx.opts.side {
        SideChoice::Away => ProbabilitySide::Away,
        SideChoice::Home => ProbabilitySide::Home,
    };
    let c = ssm_core::analytics::correlate_volume_win_prob(&games, side, ctx.params.p_value_method())?;
    let side_name = format!("{:?}", ctx.opts.side).to_lowercase();
    let method = match ctx.params.p_value {
        PValueChoice::TDist => "t_dist".to_string(),
        PValueChoice::Permutation => match c.p.counts {
            Some((k, n)) => format!("permutation ({k}/{n})"),
            None => "permutation".to_string(),
        },
    };
    let mut report = String::from("# Pregame volume vs win probability\n\n");
    writeln!(report, "- mode: {}", ctx.opts.mode.as_str()).unwrap();
    writeln!(report, "- win probability: {side_name} team").unwrap();
    writeln!(report, "- pregame window: {} h", ctx.params.pregame_window_hours).unwrap();
    writeln!(report, "- games: {}", c.n).unwrap();
    writeln!(report, "- r = {:.3}", c.r).unwrap();
    writeln!(report, "- p = {:.4} ({method})", c.p.value).unwrap();
    out.add("games.csv", table);
    out.add("correlation.csv", export::correlation_csv(&c));
    out.add("correlation.md", report);
    if ctx.opts.svg {
        out.add("correlation.svg", export::correlation_svg(&c, &format!("{} volume vs {side_name} win probability", ctx.opts.mode.as_str())));
    }
    Ok(format!("r = {:.3}, p = {:.4} ({method}), n = {}\n", c.r, c.p.value, c.n))
}

// ---------------------------------------------------------------- synth

fn cmd_synth(opts: &Opts, manifest: &mut Manifest, out: &mut Output) -> Result<String> {
    let mut spec = match &opts.config {
        Some(path) => {
            manifest.config = Some(config_hash(path)?);
            let text = std::fs::read_to_string(path).map_err(|e| AppError::io(Category::Config, path, e))?;
            ScenarioSpec::from_json(&text)?
        }
        None => ScenarioSpec::gameday(),
    };
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    let params = Params::default();
    manifest.params = serde_json::to_value(&params).expect("params serialize");
    let sc = synth::generate(&spec, &params)?;

    out.add("trajectories.csv", csv_bytes(|b| write_trajectories(b, &sc.trajectories)));
    out.add("signal_log.csv", csv_bytes(|b| write_signal_log(b, &sc.signal_log)));
    out.add("ground_truth.csv", csv_bytes(|b| synth::write_truth(b, &sc.truth)));
    let mut ix = serde_json::to_string_pretty(&sc.config).expect("intersection serializes");
    ix.push('\n');
    out.add("intersection.json", ix);
    let mut sj = serde_json::to_string_pretty(&spec).expect("scenario serializes");
    sj.push('\n');
    out.add("scenario.json", sj);
    let run = RunConfig {
        intersection: "intersection.json".into(),
        days: vec![DaySpec {
            label: file_safe(&spec.name),
            date: spec.date,
            gameday: spec.gameday,
            group: None,
            trajectories: "trajectories.csv".into(),
            signal_log: Some("signal_log.csv".into()),
        }],
        params,
        games: Default::default(),
    };
    let mut rj = serde_json::to_string_pretty(&run).expect("run config serializes");
    rj.push('\n');
    out.add("run.json", rj);
    Ok(format!(
        "{}: {} trajectories, {} scripted conflicts, seed {}\n",
        spec.name,
        sc.trajectories.len(),
        sc.truth.len(),
        spec.seed
    ))
}

// ---------------------------------------------------------------- report

fn cmd_report(ctx: &Ctx, out: &mut Output) -> Result<String> {
    let days = ctx.load_days()?;
    let events = ctx.detect_all(&days)?;
    let kind = ctx.opts.mode.kind();
    let mut doc = String::from("# Conflict report\n\n");
    writeln!(doc, "Metric: {}. Conflict kind: {kind}.\n", ctx.opts.metric.as_str()).unwrap();

    doc.push_str("## Days\n\n| day | date | group | conflicts | severe | jaywalk |\n|---|---|---|---|---|---|\n");
    let mut by_group: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (d, ev) in days.iter().zip(&events) {
        let mine: Vec<&ConflictEvent> = ctx.of_mode(ev).collect();
        let severe = mine.iter().filter(|e| e.severe).count();
        let jay = mine.iter().filter(|e| e.jaywalk).count();
        writeln!(doc, "| {} | {} | {} | {} | {severe} | {jay} |", d.spec.label, d.spec.date, d.group(), mine.len()).unwrap();
        by_group.entry(d.group()).or_default().push(mine.len());
    }

    doc.push_str("\n## Mean conflicts per day\n\n| group | days | mean |\n|---|---|---|\n");
    let mut stdout = String::new();
    for (group, counts) in &by_group {
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        writeln!(doc, "| {group} | {} | {mean:.2} |", counts.len()).unwrap();
        writeln!(stdout, "{group}: {mean:.2} conflicts per day ({} days)", counts.len()).unwrap();
    }

    let all: Vec<ConflictEvent> = events.into_iter().flatten().filter(|e| e.kind == kind).collect();
    if kind == ConflictKind::P2V {
        doc.push_str("\n## P2V types\n\n| type | count |\n|---|---|\n");
        for (t, n) in type_counts(&all) {
            writeln!(doc, "| {t} | {n} |").unwrap();
        }
        let untyped = all.iter().filter(|e| e.p2v_type.is_none()).count();
        if !all.is_empty() {
            writeln!(doc, "\nUntyped: {untyped} of {} ({:.1}%).", all.len(), 100.0 * untyped as f64 / all.len() as f64).unwrap();
        }
        doc.push_str("\n## Jaywalking conflicts by movement\n\n| movement | count |\n|---|---|\n");
        for (m, n) in jaywalk_movement_histogram(&all) {
            writeln!(doc, "| {} | {n} |", movement_label(m)).unwrap();
        }
    }
    doc.push_str("\n## Conflicts by movement\n\n| movement | count |\n|---|---|\n");
    for (m, n) in movement_histogram(&all) {
        writeln!(doc, "| {} | {n} |", movement_label(m)).unwrap();
    }
    if let Some(first) = all.iter().map(|e| e.t).reduce(f64::min) {
        let last = all.iter().map(|e| e.t).fold(first, f64::max);
        writeln!(doc, "\nEvents span {} to {}.", fmt_hhmm(first), fmt_hhmm(last)).unwrap();
    }
    doc.push_str("\n## Intersection phases\n\n");
    doc.push_str(&phase_table_md(&ctx.intersection));
    out.add("report.md", doc);
    Ok(stdout)
}
