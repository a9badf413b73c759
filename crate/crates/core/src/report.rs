//! CSV tables, output manifests and box-plot charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hazard::HazardType;
use crate::resilience::{Distribution, ScenarioResult, StudySummary};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("results row {row}: {message}")]
    Results { row: usize, message: String },
    #[error("invalid chart: {0}")]
    Chart(String),
}

pub const RESULTS_HEADER: &str = "hazard,day,k,pre_shed_mwh,post_shed_mwh,pre_outages,post_outages,overlap";

pub const SUMMARY_HEADER: &str = "hazard,day,scenarios,\
pre_min_mwh,pre_q1_mwh,pre_median_mwh,pre_q3_mwh,pre_max_mwh,pre_mean_mwh,\
post_min_mwh,post_q1_mwh,post_median_mwh,post_q3_mwh,post_max_mwh,post_mean_mwh,\
mean_delta_mwh,daily_demand_mwh,pre_shed_fraction,post_shed_fraction";

pub const HAZARD_SUMMARY_HEADER: &str =
    "hazard,scenarios,scenarios_with_outages,scenarios_with_overlap,fully_prevented";

fn opt(v: Option<impl ToString>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Rows sorted by (hazard, day, k). Post columns are empty when no plan was
/// evaluated.
pub fn results_to_csv(results: &[ScenarioResult]) -> String {
    let mut sorted: Vec<&ScenarioResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.key());
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in sorted {
        let planned = r.post_shed.is_some();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.hazard,
            r.day,
            r.k,
            r.pre_shed,
            opt(r.post_shed),
            r.pre_outage_count,
            opt(planned.then_some(r.post_outage_count)),
            r.overlap_count
        );
    }
    out
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ScenarioResult>, ReportError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RESULTS_HEADER) {
        return Err(ReportError::Results {
            row: 1,
            message: format!("expected header `{RESULTS_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = i + 2;
        let err = |message: String| ReportError::Results { row, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [hazard, day, k, pre, post, pre_n, post_n, overlap] = fields[..] else {
            return Err(err(format!("expected 8 fields, found {}", fields.len())));
        };
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("bad {what} `{s}`"))
        }
        let hazard: HazardType = hazard.parse().map_err(|e: crate::hazard::UnknownHazard| err(e.to_string()))?;
        let pre_outage_count: usize = num(pre_n, "pre_outages").map_err(err)?;
        let overlap_count: usize = num(overlap, "overlap").map_err(err)?;
        let post_shed = if post.is_empty() {
            None
        } else {
            Some(num::<f64>(post, "post_shed_mwh").map_err(err)?)
        };
        let post_outage_count = if post_n.is_empty() {
            pre_outage_count.checked_sub(overlap_count).ok_or_else(|| err("overlap exceeds outages".into()))?
        } else {
            num(post_n, "post_outages").map_err(err)?
        };
        out.push(ScenarioResult {
            hazard,
            day: num(day, "day").map_err(err)?,
            k: num(k, "k").map_err(err)?,
            pre_shed: num(pre, "pre_shed_mwh").map_err(err)?,
            post_shed,
            pre_outage_count,
            post_outage_count,
            overlap_count,
        });
    }
    Ok(out)
}

fn dist_fields(d: Option<&Distribution>) -> String {
    match d {
        Some(d) => format!("{},{},{},{},{},{}", d.min, d.q1, d.median, d.q3, d.max, d.mean),
        None => ",,,,,".to_string(),
    }
}

pub fn summary_to_csv(summary: &StudySummary) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for d in &summary.days {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            d.hazard,
            d.day,
            d.scenarios,
            dist_fields(Some(&d.pre)),
            dist_fields(d.post.as_ref()),
            opt(d.mean_delta),
            d.daily_demand,
            d.pre_shed_fraction,
            opt(d.post_shed_fraction)
        );
    }
    out
}

pub fn hazard_summary_to_csv(summary: &StudySummary) -> String {
    let mut out = format!("{HAZARD_SUMMARY_HEADER}\n");
    for (h, s) in &summary.hazards {
        let _ = writeln!(
            out,
            "{h},{},{},{},{}",
            s.scenarios, s.scenarios_with_outages, s.scenarios_with_overlap, s.fully_prevented
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub bytes: u64,
}

/// Files written to an output directory with their SHA-256 digests, keyed by
/// path relative to that directory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Manifest {
    /// Writes `contents` to `out_dir/rel` and records its digest.
    pub fn record(&mut self, out_dir: &Path, rel: &str, contents: &[u8]) -> Result<(), ReportError> {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| ReportError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, contents).map_err(|source| ReportError::Io { path, source })?;
        self.files.insert(
            rel.to_string(),
            ManifestEntry {
                sha256: sha256_hex(contents),
                bytes: contents.len() as u64,
            },
        );
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Writes `manifest.json` into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<(), ReportError> {
        let path = out_dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_json()).map_err(|source| ReportError::Io { path, source })
    }
}

/// Writes `results.csv`, `summary.csv`, `hazard_summary.csv` and a manifest
/// of the three.
pub fn write_results(results: &[ScenarioResult], summary: &StudySummary, out_dir: &Path) -> Result<Manifest, ReportError> {
    let mut manifest = Manifest::default();
    record_results(&mut manifest, results, summary, out_dir)?;
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// The table half of [`write_results`], for callers adding more files to the
/// same manifest.
pub fn record_results(
    manifest: &mut Manifest,
    results: &[ScenarioResult],
    summary: &StudySummary,
    out_dir: &Path,
) -> Result<(), ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    manifest.record(out_dir, "results.csv", results_to_csv(results).as_bytes())?;
    manifest.record(out_dir, "summary.csv", summary_to_csv(summary).as_bytes())?;
    manifest.record(out_dir, "hazard_summary.csv", hazard_summary_to_csv(summary).as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub name: String,
    /// One sample vector per day label.
    pub samples: Vec<Vec<f64>>,
}

/// Box-plot chart: one glyph per day per series.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    title: String,
    y_label: String,
    day_labels: Vec<String>,
    series: Vec<ChartSeries>,
}

impl ChartSpec {
    /// One or two series; each needs a sample vector per day label, with finite
    /// nonnegative samples.
    pub fn new(
        title: impl Into<String>,
        y_label: impl Into<String>,
        day_labels: Vec<String>,
        series: Vec<ChartSeries>,
    ) -> Result<Self, ReportError> {
        if series.is_empty() || series.len() > 2 {
            return Err(ReportError::Chart(format!("expected 1 or 2 series, got {}", series.len())));
        }
        for s in &series {
            if s.samples.len() != day_labels.len() {
                return Err(ReportError::Chart(format!(
                    "series `{}` has {} sample sets for {} days",
                    s.name,
                    s.samples.len(),
                    day_labels.len()
                )));
            }
            if s.samples.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(ReportError::Chart(format!("series `{}` has a negative or non-finite sample", s.name)));
            }
        }
        Ok(Self {
            title: title.into(),
            y_label: y_label.into(),
            day_labels,
            series,
        })
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const SERIES_COLORS: [&str; 2] = ["#4c72b0", "#dd8452"];

/// Renders a self-contained SVG 1.1 box-and-whisker chart.
pub fn render_distribution_chart(spec: &ChartSpec) -> String {
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    const PLOT_H: f64 = 300.0;
    let slot = 48.0;
    let days = spec.day_labels.len();
    let width = LEFT + RIGHT + slot * days.max(1) as f64;
    let height = TOP + PLOT_H + BOTTOM;

    let stats: Vec<Vec<Distribution>> = spec
        .series
        .iter()
        .map(|s| s.samples.iter().map(|v| Distribution::of(v)).collect())
        .collect();
    let y_max = stats.iter().flatten().map(|d| d.max).fold(0.0, f64::max);
    let y_top = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let y = |v: f64| TOP + PLOT_H * (1.0 - v / y_top);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        width / 2.0,
        xml_escape(&spec.title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0,
        xml_escape(&spec.y_label)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        TOP + PLOT_H
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + PLOT_H,
        width - RIGHT,
        TOP + PLOT_H
    );
    for i in 0..=4 {
        let v = y_top * i as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{yy:.2}" x2="{LEFT}" y2="{yy:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            yy + 3.0,
            format_tick(v)
        );
    }

    let n_series = spec.series.len();
    let box_w = slot / (2.0 * n_series as f64 + 1.0) * 1.6;
    for (di, label) in spec.day_labels.iter().enumerate() {
        let center = LEFT + slot * (di as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{center:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            TOP + PLOT_H + 16.0,
            xml_escape(label)
        );
        for (si, series) in spec.series.iter().enumerate() {
            let d = &stats[si][di];
            let offset = if n_series == 2 {
                (si as f64 - 0.5) * slot * 0.4
            } else {
                0.0
            };
            let cx = center + offset;
            let color = SERIES_COLORS[si];
            let _ = writeln!(
                svg,
                r#"<g class="box" data-day="{}" data-series="{}" data-min="{}" data-q1="{}" data-median="{}" data-q3="{}" data-max="{}">"#,
                xml_escape(label),
                xml_escape(&series.name),
                d.min,
                d.q1,
                d.median,
                d.q3,
                d.max
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
                y(d.max),
                y(d.min)
            );
            for whisker in [d.min, d.max] {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    cx - box_w / 4.0,
                    y(whisker),
                    cx + box_w / 4.0,
                    y(whisker)
                );
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{box_w:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}"/>"#,
                cx - box_w / 2.0,
                y(d.q3),
                (y(d.q1) - y(d.q3)).max(0.0)
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
                cx - box_w / 2.0,
                y(d.median),
                cx + box_w / 2.0,
                y(d.median)
            );
            svg.push_str("</g>\n");
        }
    }
    if n_series == 2 {
        for (si, series) in spec.series.iter().enumerate() {
            let x = LEFT + 10.0 + 110.0 * si as f64;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
                height - 20.0,
                SERIES_COLORS[si],
                x + 14.0,
                height - 11.0,
                xml_escape(&series.name)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
