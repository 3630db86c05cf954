//! Report files: per-run CSV, per-condition summary, overlay images and a
//! bar chart.

use super::metrics::{aggregate_runs, Metrics, RunStats};
use super::raster::InkImage;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// One autonomous run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub condition: String,
    pub model: String,
    pub character: String,
    pub feedback: bool,
    pub seed: u64,
    pub iou: f64,
    pub angular_error_abs: f64,
    pub angular_error_mse: f64,
}

impl RunRecord {
    pub fn metrics(&self) -> Metrics {
        Metrics {
            iou: self.iou,
            angular_error_abs: self.angular_error_abs,
            angular_error_mse: self.angular_error_mse,
        }
    }
}

/// Mean ± std over the runs of one condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub model: String,
    pub character: String,
    pub feedback: bool,
    pub stats: RunStats,
    /// Every run's reference and output were blank (IoU defined as 1).
    pub blank_iou: bool,
}

/// Reference and autonomous ink for one run, drawn as a grey-level overlay.
pub struct Overlay<'a> {
    pub name: String,
    pub reference: &'a InkImage,
    pub output: &'a InkImage,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportFiles {
    pub runs_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub summary_svg: PathBuf,
    pub overlays: Vec<PathBuf>,
}

/// Group runs by condition in order of first appearance.
pub fn summarize(runs: &[RunRecord]) -> Result<Vec<ConditionSummary>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        let g = groups.entry(&r.condition).or_default();
        if g.is_empty() {
            order.push(&r.condition);
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|c| {
            let g = &groups[c];
            let metrics: Vec<Metrics> = g.iter().map(|r| r.metrics()).collect();
            Ok(ConditionSummary {
                condition: c.to_string(),
                model: g[0].model.clone(),
                character: g[0].character.clone(),
                feedback: g[0].feedback,
                stats: aggregate_runs(&metrics)?,
                blank_iou: false,
            })
        })
        .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub fn write_runs_csv(runs: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in runs {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

pub fn write_summary_csv(summary: &[ConditionSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "condition",
        "model",
        "character",
        "feedback",
        "runs",
        "iou_mean",
        "iou_std",
        "angular_error_abs_mean",
        "angular_error_abs_std",
        "angular_error_mse_mean",
        "angular_error_mse_std",
        "blank_iou",
    ])
    .map_err(csv_err(path))?;
    for s in summary {
        let st = &s.stats;
        w.write_record([
            s.condition.clone(),
            s.model.clone(),
            s.character.clone(),
            s.feedback.to_string(),
            st.runs.to_string(),
            st.iou.mean.to_string(),
            st.iou.std.to_string(),
            st.angular_error_abs.mean.to_string(),
            st.angular_error_abs.std.to_string(),
            st.angular_error_mse.mean.to_string(),
            st.angular_error_mse.std.to_string(),
            s.blank_iou.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Binary PGM: white paper, reference-only ink light grey, output-only ink
/// dark grey, shared ink black.
pub fn write_overlay_pgm(reference: &InkImage, output: &InkImage, path: &Path) -> Result<()> {
    if reference.width != output.width || reference.height != output.height {
        return Err(Error::shape("overlay images differ in size"));
    }
    let mut bytes = format!("P5\n{} {}\n255\n", reference.width, reference.height).into_bytes();
    bytes.extend(reference.pixels.iter().zip(&output.pixels).map(|(r, o)| match (r, o) {
        (false, false) => 255u8,
        (true, false) => 190,
        (false, true) => 90,
        (true, true) => 0,
    }));
    fs::write(path, bytes).map_err(io_err(path))
}

/// Two-panel bar chart (IoU, angular error) of condition means with
/// ±std whiskers.
pub fn summary_svg(summary: &[ConditionSummary]) -> String {
    const BAR: f64 = 18.0;
    const GAP: f64 = 8.0;
    const PANEL_H: f64 = 200.0;
    let n = summary.len().max(1) as f64;
    let panel_w = n * (BAR + GAP) + GAP;
    let width = 2.0 * panel_w + 120.0;
    let height = PANEL_H + 170.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let panels: [(&str, fn(&RunStats) -> (f64, f64)); 2] = [
        ("IoU", |st| (st.iou.mean, st.iou.std)),
        ("Angular error (rad·steps)", |st| {
            (st.angular_error_abs.mean, st.angular_error_abs.std)
        }),
    ];
    for (p, (title, pick)) in panels.iter().enumerate() {
        let x0 = 40.0 + p as f64 * (panel_w + 40.0);
        let top = 30.0;
        let max = summary
            .iter()
            .map(|c| {
                let (m, sd) = pick(&c.stats);
                m + sd
            })
            .fold(0.0f64, f64::max)
            .max(1e-12);
        let _ = writeln!(s, r#"<text x="{x0:.1}" y="18">{title}</text>"#);
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.1}" y1="{b:.1}" x2="{x1:.1}" y2="{b:.1}" stroke="black"/>"#,
            b = top + PANEL_H,
            x1 = x0 + panel_w
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{max:.3}</text>"#, x0 - 2.0, top + 4.0);
        for (i, c) in summary.iter().enumerate() {
            let (m, sd) = pick(&c.stats);
            let h = m / max * PANEL_H;
            let x = x0 + GAP + i as f64 * (BAR + GAP);
            let fill = if c.feedback { "#c0392b" } else { "#2c6fbb" };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{BAR}" height="{h:.1}" fill="{fill}"/>"#,
                top + PANEL_H - h
            );
            let cx = x + BAR / 2.0;
            let lo = top + PANEL_H - (m - sd).max(0.0) / max * PANEL_H;
            let hi = top + PANEL_H - (m + sd) / max * PANEL_H;
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.1}" y1="{lo:.1}" x2="{cx:.1}" y2="{hi:.1}" stroke="black"/>"#
            );
            let ly = top + PANEL_H + 8.0;
            let _ = writeln!(
                s,
                r#"<text x="{cx:.1}" y="{ly:.1}" transform="rotate(60 {cx:.1} {ly:.1})">{}</text>"#,
                c.condition
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<text x="40" y="{:.0}"><tspan fill="#2c6fbb">■ without feedback</tspan>  <tspan fill="#c0392b">■ with feedback</tspan></text>"##,
        height - 8.0
    );
    s.push_str("</svg>\n");
    s
}

/// Write `runs.csv`, `summary.csv`, `summary.svg` and one overlay per entry
/// into `dir`.
pub fn emit_report(runs: &[RunRecord], overlays: &[Overlay<'_>], dir: &Path) -> Result<ReportFiles> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut summary = summarize(runs)?;
    for s in &mut summary {
        s.blank_iou = overlays
            .iter()
            .filter(|o| o.name.starts_with(&s.condition))
            .any(|o| o.reference.count() == 0 && o.output.count() == 0);
    }
    let files = ReportFiles {
        runs_csv: dir.join("runs.csv"),
        summary_csv: dir.join("summary.csv"),
        summary_svg: dir.join("summary.svg"),
        overlays: overlays.iter().map(|o| dir.join(format!("{}.pgm", o.name))).collect(),
    };
    write_runs_csv(runs, &files.runs_csv)?;
    write_summary_csv(&summary, &files.summary_csv)?;
    fs::write(&files.summary_svg, summary_svg(&summary)).map_err(io_err(&files.summary_svg))?;
    for (o, path) in overlays.iter().zip(&files.overlays) {
        write_overlay_pgm(o.reference, o.output, path)?;
    }
    Ok(files)
}
