//! On-disk experiment reports: CSV tables, graph files and an SVG plot.
//!
//! Layout of an output directory:
//!
//! ```text
//! config.txt                   config echo, re-loadable
//! traces_<setting>.csv         per-iteration rows of every trial
//! aggregate_<setting>.csv      trial means at each iteration index
//! connectivity.csv             graph facts per (setting, trial)
//! summary.csv                  step size, threshold, incoherence and end state per (setting, trial)
//! graphs/<setting>_trial<k>.edges
//! failures.csv                 only when some trial failed
//! plot.svg                     error against mean wall-clock time
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{write_config, Metric};
use super::experiment::{AggregateRow, ExperimentReport};
use crate::error::{Error, Result};
use crate::solver::traces_to_csv;
use crate::textio::{fmt_f64, parse_f64, parse_usize};

pub const AGGREGATE_CSV_HEADER: &str = "iter,mean_elapsed_s,mean_sd_u,mean_rel_fro,trials";
pub const CONNECTIVITY_CSV_HEADER: &str = "setting,trial,connected,graph_attempts,edge_count";
pub const SUMMARY_CSV_HEADER: &str =
    "setting,trial,eta,delta,mu,iterations,final_sd_u,final_rel_fro";
pub const PLOT_FILE: &str = "plot.svg";

pub fn aggregate_to_csv(rows: &[AggregateRow]) -> String {
    let mut out = format!("{AGGREGATE_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iter,
            fmt_f64(r.mean_elapsed_s),
            fmt_f64(r.mean_sd_u),
            fmt_f64(r.mean_rel_fro),
            r.trials
        );
    }
    out
}

pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == AGGREGATE_CSV_HEADER => {}
        Some((i, _)) => {
            return Err(Error::parse(
                i + 1,
                format!("expected header `{AGGREGATE_CSV_HEADER}`"),
            ))
        }
        None => return Err(Error::parse(0, "empty aggregate file")),
    }
    let mut rows: Vec<AggregateRow> = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 5 {
            return Err(Error::parse(
                ln,
                format!("expected 5 fields, found {}", f.len()),
            ));
        }
        let row = AggregateRow {
            iter: parse_usize(ln, f[0])?,
            mean_elapsed_s: parse_f64(ln, f[1])?,
            mean_sd_u: parse_f64(ln, f[2])?,
            mean_rel_fro: parse_f64(ln, f[3])?,
            trials: parse_usize(ln, f[4])?,
        };
        if row.trials == 0 {
            return Err(Error::parse(ln, "a row must average at least one trial"));
        }
        if rows.last().is_some_and(|prev| prev.iter >= row.iter) {
            return Err(Error::parse(ln, "iterations must increase"));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One polyline of a plot, in data coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn from_aggregate(label: &str, rows: &[AggregateRow], metric: Metric) -> Self {
        let points = rows
            .iter()
            .map(|r| {
                let y = match metric {
                    Metric::SdU => r.mean_sd_u,
                    Metric::RelFro => r.mean_rel_fro,
                };
                (r.mean_elapsed_s, y)
            })
            .collect();
        Self {
            label: label.to_string(),
            points,
        }
    }
}

pub fn metric_label(metric: Metric) -> &'static str {
    match metric {
        Metric::SdU => "mean SD(U*, U)",
        Metric::RelFro => "mean relative Frobenius error",
    }
}

/// Values below this are drawn at the floor of a log axis.
const LOG_FLOOR: f64 = 1e-16;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders a log-y line chart. Non-finite points are skipped.
pub fn render_svg(series: &[PlotSeries], title: &str, x_label: &str, y_label: &str) -> String {
    let (w, h) = (820.0, 520.0);
    let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let pts = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let x_max = pts().map(|p| p.0).fold(0.0_f64, f64::max);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let logs = || pts().map(|p| p.1.max(LOG_FLOOR).log10());
    let mut lo = logs().fold(f64::INFINITY, f64::min).floor();
    let mut hi = logs().fold(f64::NEG_INFINITY, f64::max).ceil();
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (-1.0, 0.0);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let sx = |x: f64| left + pw * x / x_max;
    let sy = |y: f64| top + ph * (hi - y.max(LOG_FLOOR).log10()) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let decades = (hi - lo) as i64;
    let step = (decades as f64 / 10.0).ceil().max(1.0) as i64;
    let mut e = lo as i64;
    while e <= hi as i64 {
        let y = sy(10f64.powi(e as i32));
        let _ = writeln!(
            out,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.1}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
        e += step;
    }
    for i in 0..=5 {
        let xv = x_max * i as f64 / 5.0;
        let x = sx(xv);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0,
            format_tick(xv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 15.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + ph / 2.0,
        xml_escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn format_tick(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x >= 100.0 {
        format!("{x:.0}")
    } else if x >= 1.0 {
        format!("{x:.1}")
    } else {
        format!("{x:.3}")
    }
}

/// Renders the plot of a report's aggregate curves.
pub fn report_plot(report: &ExperimentReport) -> String {
    let metric = report.config.metric;
    let series: Vec<PlotSeries> = report
        .settings
        .iter()
        .filter(|s| !s.aggregate.is_empty())
        .map(|s| PlotSeries::from_aggregate(&s.setting.label, &s.aggregate, metric))
        .collect();
    render_svg(
        &series,
        &report.config.name,
        "mean wall-clock time (s)",
        metric_label(metric),
    )
}

fn csv_field(s: &str) -> String {
    s.replace([',', '\n', '\r'], " ")
}

/// Writes the report under `out_dir` and returns the paths written. A report
/// without a single successful trial is rejected before anything is written.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.settings.iter().all(|s| s.traces.is_empty()) {
        return Err(Error::invalid("report holds no successful trial"));
    }
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    files.push((out_dir.join("config.txt"), write_config(&report.config)));

    let mut connectivity = format!("{CONNECTIVITY_CSV_HEADER}\n");
    for s in &report.settings {
        let stem = s.setting.file_stem();
        files.push((
            out_dir.join(format!("traces_{stem}.csv")),
            traces_to_csv(&s.traces),
        ));
        if !s.aggregate.is_empty() {
            files.push((
                out_dir.join(format!("aggregate_{stem}.csv")),
                aggregate_to_csv(&s.aggregate),
            ));
        }
        for g in &s.graphs {
            let _ = writeln!(
                connectivity,
                "{},{},{},{},{}",
                csv_field(&s.setting.label),
                g.trial,
                g.connected,
                g.attempts,
                g.topology.edge_count()
            );
            files.push((
                out_dir
                    .join("graphs")
                    .join(format!("{stem}_trial{}.edges", g.trial)),
                g.topology.to_edge_list(),
            ));
        }
    }
    files.push((out_dir.join("connectivity.csv"), connectivity));

    let mut summary = format!("{SUMMARY_CSV_HEADER}\n");
    for s in &report.settings {
        for (t, trace) in s.summaries.iter().zip(&s.traces) {
            let (iters, sd, fro) = trace
                .last()
                .map_or((0, trace.initial_sd_u, trace.initial_rel_fro), |r| {
                    (r.iter, r.sd_u, r.rel_fro)
                });
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{},{},{}",
                csv_field(&s.setting.label),
                t.trial,
                fmt_f64(t.eta),
                fmt_f64(t.delta),
                fmt_f64(t.mu),
                iters,
                fmt_f64(sd),
                fmt_f64(fro)
            );
        }
    }
    files.push((out_dir.join("summary.csv"), summary));
    if !report.failures.is_empty() {
        let mut text = String::from("setting,trial,message\n");
        for f in &report.failures {
            let _ = writeln!(
                text,
                "{},{},{}",
                csv_field(&f.setting),
                f.trial,
                csv_field(&f.message)
            );
        }
        files.push((out_dir.join("failures.csv"), text));
    }
    files.push((out_dir.join(PLOT_FILE), report_plot(report)));

    for (path, body) in &files {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, body)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Re-renders `plot.svg` in `dir` from its `aggregate_*.csv` files, one curve
/// per file in name order. Returns the plot path.
pub fn replot_directory(dir: &Path, metric: Metric, title: &str) -> Result<PathBuf> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("aggregate_") && n.ends_with(".csv"))
        })
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::invalid(format!(
            "no aggregate_*.csv files in {}",
            dir.display()
        )));
    }
    let mut series = Vec::new();
    for path in &entries {
        let rows = parse_aggregate_csv(&fs::read_to_string(path)?)?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let label = name.trim_start_matches("aggregate_");
        series.push(PlotSeries::from_aggregate(label, &rows, metric));
    }
    let out = dir.join(PLOT_FILE);
    fs::write(
        &out,
        render_svg(
            &series,
            title,
            "mean wall-clock time (s)",
            metric_label(metric),
        ),
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, sd: f64) -> AggregateRow {
        AggregateRow {
            iter,
            mean_elapsed_s: iter as f64 * 0.5,
            mean_sd_u: sd,
            mean_rel_fro: sd * 2.0,
            trials: 3,
        }
    }

    #[test]
    fn aggregate_csv_round_trip() {
        let rows = vec![row(0, 0.3), row(1, 1e-3), row(2, 1.234_567_890_123e-12)];
        assert_eq!(parse_aggregate_csv(&aggregate_to_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn aggregate_csv_rejects_garbage() {
        assert!(parse_aggregate_csv("").is_err());
        assert!(parse_aggregate_csv("iter\n").is_err());
        let h = AGGREGATE_CSV_HEADER;
        assert!(parse_aggregate_csv(&format!("{h}\n1,0,0,0\n")).is_err());
        assert!(parse_aggregate_csv(&format!("{h}\n1,0,0,0,0\n")).is_err());
        assert!(parse_aggregate_csv(&format!("{h}\n2,0,0,0,1\n1,0,0,0,1\n")).is_err());
        assert!(parse_aggregate_csv(&format!("{h}\n1,0,NaN,0,1\n")).is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let a = PlotSeries::from_aggregate("a<b", &[row(0, 1.0), row(1, 1e-5)], Metric::SdU);
        let b = PlotSeries::from_aggregate("b", &[row(0, 0.0)], Metric::RelFro);
        let svg = render_svg(&[a, b], "t & t", "x", "y");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b") && svg.contains("t &amp; t"));
        assert!(svg.trim_end().ends_with("</svg>"));
        let empty = render_svg(&[], "none", "x", "y");
        assert!(!empty.contains("NaN") && !empty.contains("inf"));
    }
}
