//! Trajectory and signal-log CSV files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ssm_core::classify::{SignalInterval, SignalLog, SignalState};
use ssm_core::{ObjectClass, ObjectId, Phase, Sample, Trajectory};

use crate::error::{AppError, Category, Result};

pub const TRAJECTORY_HEADER: [&str; 7] = ["object_id", "class", "t", "x", "y", "vx", "vy"];
pub const SIGNAL_HEADER: [&str; 4] = ["t_start", "t_end", "phase", "state"];

/// A row that was dropped, with its 1-based line number in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedTrajectories {
    pub trajectories: Vec<Trajectory>,
    pub rejected: Vec<Rejected>,
    /// Data rows read, accepted or not.
    pub rows: usize,
}

impl ParsedTrajectories {
    pub fn accepted_rows(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }
}

fn check_header(found: &csv::StringRecord, want: &[&str], what: &str) -> Result<()> {
    if found.iter().map(str::trim).ne(want.iter().copied()) {
        return Err(AppError::data(format!(
            "malformed {what} header: expected {:?}, found {:?}",
            want.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(r)
}

fn finite(field: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = field.trim().parse().map_err(|_| format!("{name} {field:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} {field:?} is not finite"))
    }
}

struct Row {
    id: String,
    class: ObjectClass,
    sample: Sample,
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<Row, String> {
    if rec.len() != TRAJECTORY_HEADER.len() {
        return Err(format!("expected 7 fields, found {}", rec.len()));
    }
    let id = rec[0].trim();
    if id.is_empty() {
        return Err("empty object_id".into());
    }
    let class: ObjectClass = rec[1].trim().parse().map_err(|_| format!("unknown class {:?}", &rec[1]))?;
    let t = finite(&rec[2], "t")?;
    if t < 0.0 {
        return Err(format!("negative time {t}"));
    }
    let (x, y) = (finite(&rec[3], "x")?, finite(&rec[4], "y")?);
    let sample = match (rec[5].trim(), rec[6].trim()) {
        ("", "") => Sample::new(t, x, y),
        ("", _) | (_, "") => return Err("only one velocity component present".into()),
        (vx, vy) => Sample::new(t, x, y).with_velocity(finite(vx, "vx")?, finite(vy, "vy")?),
    };
    Ok(Row { id: id.to_string(), class, sample })
}

/// Parse trajectory rows, grouping by object and sorting by time. Bad rows
/// and later duplicates of an (object_id, t) pair are rejected, not fatal;
/// a malformed header is.
pub fn parse_trajectories<R: Read>(input: R) -> Result<ParsedTrajectories> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| AppError::data(format!("unreadable header: {e}")))?.clone();
    check_header(&header, &TRAJECTORY_HEADER, "trajectory")?;
    let mut out = ParsedTrajectories::default();
    let mut objects: BTreeMap<String, (ObjectClass, Vec<(u64, Sample)>)> = BTreeMap::new();
    for rec in rdr.records() {
        out.rows += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rejected.push(Rejected { line, reason: e.to_string() });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        match parse_row(&rec) {
            Ok(row) => {
                let entry = objects.entry(row.id).or_insert_with(|| (row.class, Vec::new()));
                if entry.0 != row.class {
                    out.rejected.push(Rejected { line, reason: format!("class {} differs from earlier rows ({})", row.class.as_str(), entry.0.as_str()) });
                    continue;
                }
                entry.1.push((line, row.sample));
            }
            Err(reason) => out.rejected.push(Rejected { line, reason }),
        }
    }
    for (id, (class, mut rows)) in objects {
        rows.sort_by(|a, b| a.1.t.total_cmp(&b.1.t).then(a.0.cmp(&b.0)));
        let mut samples: Vec<Sample> = Vec::with_capacity(rows.len());
        for (line, s) in rows {
            if samples.last().is_some_and(|p| p.t == s.t) {
                out.rejected.push(Rejected { line, reason: format!("duplicate time {} for object {id}", s.t) });
                continue;
            }
            samples.push(s);
        }
        out.trajectories.push(Trajectory::new(ObjectId(id), class, samples)?);
    }
    out.rejected.sort_by_key(|r| r.line);
    Ok(out)
}

pub fn read_trajectories(path: &Path) -> Result<ParsedTrajectories> {
    let f = File::open(path).map_err(|e| AppError::io(Category::Data, path, e))?;
    parse_trajectories(std::io::BufReader::new(f)).map_err(|e| AppError { message: format!("{}: {}", path.display(), e.message), ..e })
}

/// Write rows ordered by object id then time; meters with 3 decimals,
/// seconds with 1.
pub fn write_trajectories<W: Write>(out: W, trajs: &[Trajectory]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", TRAJECTORY_HEADER.join(","))?;
    let mut order: Vec<&Trajectory> = trajs.iter().collect();
    order.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    for tr in order {
        for s in tr.samples() {
            write!(w, "{},{},{:.1},{:.3},{:.3},", tr.object_id, tr.class.as_str(), s.t, s.pos.x, s.pos.y)?;
            match s.vel {
                Some(v) => writeln!(w, "{:.3},{:.3}", v.x, v.y)?,
                None => writeln!(w, ",")?,
            }
        }
    }
    w.flush()
}

pub fn write_rejected<W: Write>(out: W, rejected: &[Rejected]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["line", "reason"])?;
    for r in rejected {
        w.write_record([r.line.to_string(), r.reason.clone()])?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedSignalLog {
    pub log: SignalLog,
    pub rejected: Vec<Rejected>,
}

fn parse_interval(rec: &csv::StringRecord) -> std::result::Result<SignalInterval, String> {
    if rec.len() != SIGNAL_HEADER.len() {
        return Err(format!("expected 4 fields, found {}", rec.len()));
    }
    let t_start = finite(&rec[0], "t_start")?;
    let t_end = finite(&rec[1], "t_end")?;
    let n: u8 = rec[2].trim().parse().map_err(|_| format!("phase {:?} is not an integer", &rec[2]))?;
    let phase = Phase::new(n).map_err(|e| e.to_string())?;
    let state: SignalState = rec[3].parse().map_err(|e: ssm_core::Error| e.to_string())?;
    if t_start >= t_end {
        return Err(format!("t_start {t_start} is not before t_end {t_end}"));
    }
    Ok(SignalInterval { t_start, t_end, phase, state })
}

/// Parse a signal log; malformed rows are rejected, overlapping intervals of
/// one phase are fatal.
pub fn parse_signal_log<R: Read>(input: R) -> Result<ParsedSignalLog> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| AppError::data(format!("unreadable header: {e}")))?.clone();
    check_header(&header, &SIGNAL_HEADER, "signal log")?;
    let mut intervals = Vec::new();
    let mut rejected = Vec::new();
    for rec in rdr.records() {
        match rec {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line());
                match parse_interval(&rec) {
                    Ok(iv) => intervals.push(iv),
                    Err(reason) => rejected.push(Rejected { line, reason }),
                }
            }
            Err(e) => rejected.push(Rejected { line: e.position().map_or(0, |p| p.line()), reason: e.to_string() }),
        }
    }
    Ok(ParsedSignalLog { log: SignalLog::new(intervals)?, rejected })
}

pub fn read_signal_log(path: &Path) -> Result<ParsedSignalLog> {
    let f = File::open(path).map_err(|e| AppError::io(Category::Data, path, e))?;
    parse_signal_log(std::io::BufReader::new(f)).map_err(|e| AppError { message: format!("{}: {}", path.display(), e.message), ..e })
}

pub fn write_signal_log<W: Write>(out: W, log: &SignalLog) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", SIGNAL_HEADER.join(","))?;
    let mut ivs = log.intervals().to_vec();
    ivs.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.phase.cmp(&b.phase)));
    for iv in ivs {
        writeln!(w, "{:.1},{:.1},{},{}", iv.t_start, iv.t_end, iv.phase.number(), iv.state.as_str())?;
    }
    w.flush()
}
