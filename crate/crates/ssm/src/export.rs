//! CSV and SVG renderings of analysis results. Every function returns the
//! file contents; writing and hashing is left to the output stage.

use std::fmt::Write as _;

use ssm_core::analytics::{AggregateSeries, Correlation, DensitySurface, SpatialHistogram, VolumeMatrix};
use ssm_core::classify::movement_label;
use ssm_core::pet::MeshGrid;
use ssm_core::ConflictEvent;

pub const EVENT_HEADER: [&str; 15] = [
    "kind", "metric", "value", "t", "x", "y", "id_a", "class_a", "id_b", "class_b", "movement", "p2v_type", "ped_role",
    "severe", "jaywalk",
];

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

/// Events CSV. Unclassified movement, type and role are left empty.
pub fn events_csv(events: &[ConflictEvent]) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(EVENT_HEADER).unwrap();
    for e in events {
        w.write_record([
            e.kind.as_str().to_string(),
            e.metric.as_str().to_string(),
            format!("{:.3}", e.value),
            format!("{:.3}", e.t),
            format!("{:.3}", e.location.x),
            format!("{:.3}", e.location.y),
            e.id_a.to_string(),
            e.class_a.to_string(),
            e.id_b.to_string(),
            e.class_b.to_string(),
            e.movement.map(|m| m.to_string()).unwrap_or_default(),
            e.p2v_type.map(|t| t.to_string()).unwrap_or_default(),
            e.ped_role.map(|r| r.to_string()).unwrap_or_default(),
            e.severe.to_string(),
            e.jaywalk.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

/// `label,count` rows, as produced by the movement and type histograms.
pub fn counts_csv(header: [&str; 2], rows: impl IntoIterator<Item = (String, usize)>) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(header).unwrap();
    for (label, n) in rows {
        w.write_record([label, n.to_string()]).unwrap();
    }
    finish(w)
}

pub fn movement_counts_csv(hist: &[(Option<ssm_core::MovementCode>, usize)]) -> Vec<u8> {
    counts_csv(["movement", "count"], hist.iter().map(|(m, n)| (movement_label(*m), *n)))
}

pub fn volume_csv(m: &VolumeMatrix) -> Vec<u8> {
    let mut w = csv_writer();
    let mut header = vec!["phase".to_string()];
    header.extend((0..24).map(|h| format!("h{h:02}")));
    w.write_record(&header).unwrap();
    for (phase, row) in m.phases.iter().zip(&m.counts) {
        let mut rec = vec![phase.number().to_string()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).unwrap();
    }
    finish(w)
}

pub fn aggregate_csv(series: &[AggregateSeries]) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(["group", "hour", "n_days", "mean", "low", "high"]).unwrap();
    for s in series {
        for p in &s.points {
            w.write_record([
                s.group.clone(),
                p.hour.to_string(),
                s.n_days.to_string(),
                format!("{:.4}", p.mean),
                format!("{:.4}", p.low),
                format!("{:.4}", p.high),
            ])
            .unwrap();
        }
    }
    finish(w)
}

/// Grid with one row per mesh row (top row first) and one column per mesh
/// column; headers give cell-center coordinates.
fn grid_csv(mesh: &MeshGrid, cell: impl Fn(usize) -> String) -> Vec<u8> {
    let mut w = csv_writer();
    let mut header = vec!["y\\x".to_string()];
    header.extend((0..mesh.n_cols).map(|c| format!("{:.2}", mesh.cell_center(mesh.index(c, 0)).x)));
    w.write_record(&header).unwrap();
    for r in (0..mesh.n_rows).rev() {
        let mut rec = vec![format!("{:.2}", mesh.cell_center(mesh.index(0, r)).y)];
        rec.extend((0..mesh.n_cols).map(|c| cell(mesh.index(c, r))));
        w.write_record(&rec).unwrap();
    }
    finish(w)
}

pub fn histogram_csv(h: &SpatialHistogram) -> Vec<u8> {
    grid_csv(&h.mesh, |i| h.counts[i].to_string())
}

pub fn kde_csv(d: &DensitySurface) -> Vec<u8> {
    grid_csv(&d.mesh, |i| format!("{:.6e}", d.values[i]))
}

pub fn correlation_csv(c: &Correlation) -> Vec<u8> {
    let mut w = csv_writer();
    w.write_record(["label", "probability_norm", "volume_norm"]).unwrap();
    for (p, v, label) in &c.plot {
        w.write_record([label.clone(), format!("{p:.6}"), format!("{v:.6}")]).unwrap();
    }
    finish(w)
}

// ---------------------------------------------------------------- SVG

const W: f64 = 720.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<text x="{MARGIN}" y="20" font-size="13">{}</text>"#, escape(title)).unwrap();
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// White to dark red.
fn shade(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let g = (255.0 * (1.0 - v)).round() as u8;
    let r = (255.0 - 100.0 * v).round() as u8;
    format!("#{r:02x}{g:02x}{g:02x}")
}

/// Game markers on an hour axis: (hour as fraction of day, label).
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub hour: f64,
    pub label: String,
}

/// Phase × hour heatmap with optional kickoff and end markers.
pub fn volume_svg(m: &VolumeMatrix, title: &str, markers: &[Marker]) -> String {
    let mut s = svg_open(title);
    let (x0, y0) = (MARGIN, MARGIN);
    let cw = (W - 2.0 * MARGIN) / 24.0;
    let ch = (H - 2.0 * MARGIN) / m.phases.len().max(1) as f64;
    let max = m.counts.iter().flat_map(|r| r.iter()).copied().max().unwrap_or(0).max(1) as f64;
    for (i, (phase, row)) in m.phases.iter().zip(&m.counts).enumerate() {
        let y = y0 + i as f64 * ch;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, y + ch / 2.0 + 4.0, phase.number()).unwrap();
        for (h, &n) in row.iter().enumerate() {
            writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{n}</title></rect>"#,
                x0 + h as f64 * cw,
                y,
                cw,
                ch,
                shade(n as f64 / max)
            )
            .unwrap();
        }
    }
    for h in (0..24).step_by(3) {
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{h:02}</text>"#, x0 + (h as f64 + 0.5) * cw, H - MARGIN + 14.0).unwrap();
    }
    for mk in markers {
        let x = x0 + mk.hour * cw;
        writeln!(s, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black" stroke-dasharray="4 2"/>"#, y0 - 4.0, H - MARGIN).unwrap();
        writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 - 8.0, escape(&mk.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Mean lines with shaded bands, one per group.
pub fn aggregate_svg(series: &[AggregateSeries], title: &str) -> String {
    let mut s = svg_open(title);
    let (h0, h1) = ssm_core::analytics::AGGREGATE_HOURS;
    let ymax = series.iter().flat_map(|g| g.points.iter().map(|p| p.high)).fold(1.0f64, f64::max);
    let px = |h: f64| MARGIN + (h - f64::from(h0)) / f64::from(h1 - 1 - h0).max(1.0) * (W - 2.0 * MARGIN);
    let py = |v: f64| H - MARGIN - v.max(0.0) / ymax * (H - 2.0 * MARGIN);
    for (i, g) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper: Vec<String> = g.points.iter().map(|p| format!("{:.1},{:.1}", px(f64::from(p.hour)), py(p.high))).collect();
        let lower: Vec<String> = g.points.iter().rev().map(|p| format!("{:.1},{:.1}", px(f64::from(p.hour)), py(p.low))).collect();
        writeln!(s, r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, upper.join(" "), lower.join(" ")).unwrap();
        let line: Vec<String> = g.points.iter().map(|p| format!("{:.1},{:.1}", px(f64::from(p.hour)), py(p.mean))).collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{color}">{} (n={})</text>"#, W - MARGIN - 150.0, MARGIN + 14.0 * i as f64, escape(&g.group), g.n_days).unwrap();
    }
    for h in h0..h1 {
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{h:02}</text>"#, px(f64::from(h)), H - MARGIN + 14.0).unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ymax:.1}</text>"#, MARGIN - 4.0, MARGIN + 4.0).unwrap();
    s.push_str("</svg>\n");
    s
}

/// Normalized volume against normalized win probability.
pub fn correlation_svg(c: &Correlation, title: &str) -> String {
    let mut s = svg_open(title);
    let px = |v: f64| MARGIN + v * (W - 2.0 * MARGIN);
    let py = |v: f64| H - MARGIN - v * (H - 2.0 * MARGIN);
    writeln!(s, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##, W - 2.0 * MARGIN, H - 2.0 * MARGIN).unwrap();
    let line: Vec<String> = c.plot.iter().map(|(p, v, _)| format!("{:.1},{:.1}", px(*p), py(*v))).collect();
    writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}"/>"#, line.join(" "), PALETTE[0]).unwrap();
    for (p, v, label) in &c.plot {
        writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{}"><title>{}</title></circle>"#, px(*p), py(*v), PALETTE[1], escape(label)).unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">win probability (normalized)</text>"#, W / 2.0, H - 12.0).unwrap();
    writeln!(s, r#"<text x="{:.1}" y="{:.1}">r = {:.3}, p = {:.4}</text>"#, MARGIN + 8.0, MARGIN + 16.0, c.r, c.p.value).unwrap();
    s.push_str("</svg>\n");
    s
}

/// Cell grid heatmap (histogram counts or density values).
pub fn grid_svg(mesh: &MeshGrid, values: &[f64], title: &str) -> String {
    let mut s = svg_open(title);
    let side = (H - 2.0 * MARGIN) / mesh.n_rows.max(mesh.n_cols).max(1) as f64;
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let max = if max > 0.0 { max } else { 1.0 };
    for r in 0..mesh.n_rows {
        for c in 0..mesh.n_cols {
            let v = values[mesh.index(c, r)];
            if v <= 0.0 {
                continue;
            }
            writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{side:.2}" height="{side:.2}" fill="{}"/>"#,
                MARGIN + c as f64 * side,
                MARGIN + (mesh.n_rows - 1 - r) as f64 * side,
                shade(v / max)
            )
            .unwrap();
        }
    }
    writeln!(s, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##, side * mesh.n_cols as f64, side * mesh.n_rows as f64).unwrap();
    s.push_str("</svg>\n");
    s
}
