//! Benchmark report rendering: JSON with full run records, a flat CSV of
//! per-run results, and one SVG accuracy histogram per algorithm.
//!
//! All three outputs are deterministic byte-for-byte for a given report:
//! floats are printed with Rust's shortest round-trip formatting and
//! iteration follows the report's stored order.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::harness::{AlgorithmSummary, BenchmarkReport};

/// Column layout of [`csv_string`].
pub const CSV_HEADER: &str = "algorithm,run,seed,x,y,s,error,distance,evals";

/// Pretty-printed JSON of the full report, trailing newline included.
pub fn json_string(report: &BenchmarkReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report contains only plain data");
    out.push('\n');
    out
}

pub fn write_json(report: &BenchmarkReport, path: &Path) -> io::Result<()> {
    fs::write(path, json_string(report))
}

/// One row per run, grouped by algorithm in report order.
pub fn csv_string(report: &BenchmarkReport) -> String {
    let mut out = String::with_capacity(64 * (1 + report.summaries.len()));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for summary in &report.summaries {
        for (run, record) in summary.records.iter().enumerate() {
            let pose = record.best_pose;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                summary.algorithm,
                run,
                record.seed,
                pose.x,
                pose.y,
                pose.s,
                record.best_error,
                summary.histogram.distances[run],
                record.evals_used,
            ));
        }
    }
    out
}

pub fn write_csv(report: &BenchmarkReport, path: &Path) -> io::Result<()> {
    fs::write(path, csv_string(report))
}

const SVG_WIDTH: f64 = 520.0;
const SVG_HEIGHT: f64 = 380.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 52.0;

/// Bar-chart accuracy histogram: bin index on the abscissa, run count on
/// the ordinate, the overflow bin labeled `9+`.
pub fn svg_string(summary: &AlgorithmSummary) -> String {
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let baseline = MARGIN_TOP + plot_h;
    let max_count = summary.histogram.bin_counts.iter().copied().max().unwrap_or(0).max(1);
    let slot = plot_w / 10.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{} accuracy histogram ({} runs)</text>\n",
        SVG_WIDTH / 2.0,
        summary.algorithm,
        summary.histogram.runs
    ));

    // Horizontal guides at quarter fractions of the tallest bar.
    for quarter in 0..=4u32 {
        let count = max_count as f64 * quarter as f64 / 4.0;
        let y = baseline - plot_h * quarter as f64 / 4.0;
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{:.1}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 4.0,
            count
        ));
    }

    for (bin, &count) in summary.histogram.bin_counts.iter().enumerate() {
        let height = plot_h * count as f64 / max_count as f64;
        let x = MARGIN_LEFT + bin as f64 * slot + slot * 0.1;
        let y = baseline - height;
        svg.push_str(&format!(
            "  <rect class=\"bar\" x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" \
             height=\"{height:.1}\" fill=\"#4878a8\"/>\n",
            slot * 0.8
        ));
        if count > 0 {
            svg.push_str(&format!(
                "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"middle\">{count}</text>\n",
                x + slot * 0.4,
                y - 4.0
            ));
        }
        let label = if bin == 9 { "9+".to_string() } else { bin.to_string() };
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{label}</text>\n",
            x + slot * 0.4,
            baseline + 18.0
        ));
    }

    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{baseline:.1}\" x2=\"{:.1}\" y2=\"{baseline:.1}\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT + plot_w
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" \
         y2=\"{baseline:.1}\" stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">distance to ground truth (bin)</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">runs</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Writes `hist_<algorithm>.svg` per summary into `dir` (created if
/// missing); returns the written paths in report order.
pub fn write_svgs(report: &BenchmarkReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(report.summaries.len());
    for summary in &report.summaries {
        let path = dir.join(format!("hist_{}.svg", summary.algorithm.name()));
        fs::write(&path, svg_string(summary))?;
        paths.push(path);
    }
    Ok(paths)
}
