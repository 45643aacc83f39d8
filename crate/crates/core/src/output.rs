//! CSV, JSON and SVG emitters. All frequencies leave the program in linear Hz.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::params::to_hz;
use crate::steady::SweepRow;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 9] = [
    "eta_hz",
    "n_photon",
    "power_w",
    "linewidth_hz_regression",
    "linewidth_hz_analytic",
    "linewidth_hz_filter",
    "c_bd",
    "converged",
    "direction",
];

/// 17 significant digits, so a value survives a text round trip.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut s = CSV_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let fields = [
            fmt_num(to_hz(r.eta)),
            fmt_num(r.n_photon_s),
            fmt_num(r.power_w),
            fmt_opt(r.linewidth.map(to_hz)),
            fmt_opt(r.linewidth_analytic.map(to_hz)),
            fmt_opt(r.linewidth_filter.map(to_hz)),
            fmt_opt(r.c_bd),
            r.converged.to_string(),
            r.direction.as_str().to_string(),
        ];
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

/// Generic table with a header row, numbers at 17 significant digits.
pub fn table_to_csv(header: &[&str], rows: &[Vec<Option<f64>>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| fmt_opt(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// A sweep row in output units.
#[derive(Debug, Clone, Serialize)]
pub struct RowRecord {
    pub eta_hz: f64,
    pub n_photon: f64,
    pub power_w: f64,
    pub linewidth_hz_regression: Option<f64>,
    pub linewidth_hz_analytic: Option<f64>,
    pub linewidth_hz_filter: Option<f64>,
    pub c_bd: Option<f64>,
    pub converged: bool,
    pub stable: Option<bool>,
    pub method: Option<String>,
    pub direction: &'static str,
}

impl From<&SweepRow> for RowRecord {
    fn from(r: &SweepRow) -> Self {
        Self {
            eta_hz: to_hz(r.eta),
            n_photon: r.n_photon_s,
            power_w: r.power_w,
            linewidth_hz_regression: r.linewidth.map(to_hz),
            linewidth_hz_analytic: r.linewidth_analytic.map(to_hz),
            linewidth_hz_filter: r.linewidth_filter.map(to_hz),
            c_bd: r.c_bd,
            converged: r.converged,
            stable: r.steady.as_ref().map(|s| s.stable),
            method: r
                .steady
                .as_ref()
                .and_then(|s| serde_json::to_value(s.method).ok())
                .and_then(|v| v.as_str().map(String::from)),
            direction: r.direction.as_str(),
        }
    }
}

/// Wraps `body` in an object carrying the command name and schema version.
pub fn json_document(command: &str, body: serde_json::Value) -> String {
    let mut doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
    });
    if let (Some(d), serde_json::Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const COLORS: [&str; 6] = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];
const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Self> {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return None;
        }
        let (lo, hi) = if log {
            (lo.floor(), hi.ceil().max(lo.floor() + 1.0))
        } else if hi > lo {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        } else {
            (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
        };
        Some(Self { lo, hi, log })
    }

    fn frac(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let t = if self.log { v.log10() } else { v };
        Some((t - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let step = (((b - a) as f64) / 8.0).ceil().max(1.0) as i32;
            (a..=b)
                .step_by(step as usize)
                .map(|e| (e as f64, format!("1e{e}")))
                .collect()
        } else {
            (0..=5)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static line plot. Non-positive values are dropped on log axes and break
/// the line there.
pub fn svg_plot(plot: &Plot) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(&plot.title)
    );
    let all = || plot.series.iter().flat_map(|se| se.points.iter());
    let (Some(ax), Some(ay)) = (
        Axis::fit(all().map(|p| p.0), plot.log_x),
        Axis::fit(all().map(|p| p.1), plot.log_y),
    ) else {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, W / 2.0, H / 2.0);
        s.push_str("</svg>\n");
        return s;
    };
    let px = |f: f64| LEFT + f * pw;
    let py = |f: f64| TOP + (1.0 - f) * ph;
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, label) in ax.ticks() {
        let x = px((v - ax.lo) / (ax.hi - ax.lo));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
            TOP + ph,
            TOP + ph + 16.0
        );
    }
    for (v, label) in ay.ticks() {
        let y = py((v - ay.lo) / (ay.hi - ay.lo));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 18.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );
    for (k, se) in plot.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let dash = if se.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in &se.points {
            match (ax.frac(x), ay.frac(y)) {
                (Some(fx), Some(fy)) => runs.last_mut().expect("non-empty").push((px(fx), py(fy))),
                _ => runs.push(Vec::new()),
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                pts.join(" ")
            );
            if run.len() == 1 {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, run[0].0, run[0].1);
            }
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            LEFT + pw - 150.0,
            LEFT + pw - 125.0,
            LEFT + pw - 120.0,
            ly + 4.0,
            escape(&se.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Colour map of log10(value) on a grid of cells; `None` cells stay blank
/// and `mark` cells get a white outline.
pub fn svg_heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    value: &dyn Fn(usize, usize) -> Option<f64>,
    mark: &dyn Fn(usize, usize) -> bool,
) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let logs: Vec<f64> = (0..xs.len())
        .flat_map(|i| (0..ys.len()).map(move |j| (i, j)))
        .filter_map(|(i, j)| value(i, j))
        .filter(|v| *v > 0.0)
        .map(f64::log10)
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (cw, ch) = (pw / xs.len().max(1) as f64, ph / ys.len().max(1) as f64);
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            let Some(v) = value(i, j).filter(|v| *v > 0.0) else {
                continue;
            };
            let t = if hi > lo { (v.log10() - lo) / (hi - lo) } else { 0.5 };
            let (r, g, b) = (
                (40.0 + 215.0 * t) as u8,
                (40.0 + 160.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8,
                (200.0 * (1.0 - t)) as u8,
            );
            let (x, y) = (LEFT + i as f64 * cw, TOP + ph - (j as f64 + 1.0) * ch);
            let stroke = if mark(i, j) { r#" stroke="white" stroke-width="1.5""# } else { "" };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="rgb({r},{g},{b})"{stroke}/>"#
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let label_every = (xs.len() / 6).max(1);
    for (i, x) in xs.iter().enumerate().step_by(label_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.3e}</text>"#,
            LEFT + (i as f64 + 0.5) * cw,
            TOP + ph + 16.0
        );
    }
    let label_every = (ys.len() / 6).max(1);
    for (j, y) in ys.iter().enumerate().step_by(label_every) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#,
            LEFT - 6.0,
            TOP + ph - (j as f64 + 0.5) * ch + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    if lo.is_finite() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">log10 range [{lo:.2}, {hi:.2}]</text>"#,
            W - RIGHT,
            TOP - 6.0
        );
    }
    s.push_str("</svg>\n");
    s
}
