//! Static SVG plots of trajectories, envelopes and boundary exponents.

use std::fmt::Write;

use clap::ValueEnum;

use crate::error::{CliError, CliResult};
use crate::io::NumericTable;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: [f64; 4] = [40.0, 30.0, 60.0, 80.0]; // top, right, bottom, left
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const DEFAULT_SNAPSHOTS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Profile,
    Envelope,
    Exponent,
}

impl PlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Profile => "profile",
            Self::Envelope => "envelope",
            Self::Exponent => "exponent",
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        Some(Self {
            lo: lo - pad,
            hi: hi + pad,
            log,
        })
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|k| {
                let raw = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
                if self.log {
                    let value = 10f64.powf(raw);
                    (value, format!("{value:.2e}"))
                } else {
                    (raw, format!("{raw:.3}"))
                }
            })
            .collect()
    }
}

struct Canvas {
    body: String,
    x: Scale,
    y: Scale,
}

impl Canvas {
    fn new(x: Scale, y: Scale, title: &str, x_label: &str, y_label: &str) -> Self {
        let [top, right, bottom, left] = MARGIN;
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - left - right,
            HEIGHT - top - bottom
        );
        let _ = writeln!(body, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
        let _ = writeln!(
            body,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            left + 0.5 * (WIDTH - left - right),
            HEIGHT - 15.0,
            escape(x_label)
        );
        let _ = writeln!(
            body,
            r#"<text x="18" y="{0}" text-anchor="middle" font-size="14" transform="rotate(-90 18 {0})">{1}</text>"#,
            top + 0.5 * (HEIGHT - top - bottom),
            escape(y_label)
        );
        let mut canvas = Self { body, x, y };
        for (v, label) in x.ticks() {
            let px = canvas.px(v);
            let _ = writeln!(
                canvas.body,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"#,
                HEIGHT - bottom + 16.0
            );
        }
        for (v, label) in y.ticks() {
            let py = canvas.py(v);
            let _ = writeln!(
                canvas.body,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"#,
                left - 6.0,
                py + 4.0
            );
        }
        canvas
    }

    fn px(&self, v: f64) -> f64 {
        let [_, right, _, left] = MARGIN;
        left + self.x.unit(v) * (WIDTH - left - right)
    }

    fn py(&self, v: f64) -> f64 {
        let [top, _, bottom, _] = MARGIN;
        HEIGHT - bottom - self.y.unit(v) * (HEIGHT - top - bottom)
    }

    fn visible(&self, x: f64, y: f64) -> bool {
        x.is_finite() && y.is_finite() && (!self.x.log || x > 0.0) && (!self.y.log || y > 0.0)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| self.visible(*x, *y))
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }

    fn scatter(&mut self, pts: &[(f64, f64)], color: &str) {
        for &(x, y) in pts {
            if self.visible(x, y) {
                let (cx, cy) = (self.px(x), self.py(y));
                let _ = writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{color}"/>"#);
            }
        }
    }

    fn legend(&mut self, k: usize, text: &str, color: &str) {
        let x = WIDTH - MARGIN[1] - 170.0;
        let y = MARGIN[0] + 18.0 + 16.0 * k as f64;
        let _ = writeln!(
            self.body,
            r#"<line x1="{x}" y1="{0}" x2="{1}" y2="{0}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}" font-size="12">{4}</text>"#,
            y - 4.0,
            x + 20.0,
            x + 26.0,
            y,
            escape(text)
        );
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn input_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn require(table: &NumericTable, name: &str) -> CliResult<usize> {
    table
        .column(name)
        .ok_or_else(|| input_err(format!("input has no column {name:?}")))
}

/// Least-squares slope and intercept of `ln y` against `ln x` over positive pairs.
pub fn log_log_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let logs: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Snapshot rows drawn by default: evenly spaced, always including the last.
fn default_rows(count: usize) -> Vec<usize> {
    if count <= DEFAULT_SNAPSHOTS {
        return (0..count).collect();
    }
    let mut rows: Vec<usize> = (0..DEFAULT_SNAPSHOTS)
        .map(|k| k * (count - 1) / (DEFAULT_SNAPSHOTS - 1))
        .collect();
    rows.dedup();
    rows
}

/// Profiles `u(t_k, ·)` from a trajectory CSV. `x` gives the node abscissae;
/// without it the node index is used.
pub fn profile(table: &NumericTable, x: Option<&[f64]>, rows: Option<&[usize]>) -> CliResult<String> {
    let t_col = require(table, "t")?;
    let nodes: Vec<usize> = (0..table.header.len()).filter(|&c| c != t_col).collect();
    if nodes.is_empty() {
        return Err(input_err("trajectory has no node columns"));
    }
    let abscissa: Vec<f64> = match x {
        Some(x) if x.len() == nodes.len() => x.to_vec(),
        Some(x) => {
            return Err(input_err(format!(
                "{} node coordinates for {} node columns",
                x.len(),
                nodes.len()
            )))
        }
        None => (0..nodes.len()).map(|i| i as f64).collect(),
    };
    let selected = rows.map_or_else(|| default_rows(table.rows.len()), <[usize]>::to_vec);
    if let Some(bad) = selected.iter().find(|&&r| r >= table.rows.len()) {
        return Err(input_err(format!("snapshot {bad} out of range (have {})", table.rows.len())));
    }
    let values = selected.iter().flat_map(|&r| nodes.iter().map(move |&c| table.rows[r][c]));
    let xs = Scale::fit(abscissa.iter().copied(), false).expect("non-empty");
    let ys = Scale::fit(values, false).ok_or_else(|| input_err("no finite values"))?;
    let label = if x.is_some() { "x" } else { "node" };
    let mut canvas = Canvas::new(xs, ys, "Profiles", label, "u(t, x)");
    for (k, &r) in selected.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = abscissa
            .iter()
            .zip(&nodes)
            .map(|(&x, &c)| (x, table.rows[r][c]))
            .collect();
        canvas.polyline(&pts, color);
        canvas.legend(k, &format!("t = {:.3e}", table.rows[r][t_col]), color);
    }
    Ok(canvas.finish())
}

/// `c_min(t)` and `c_max(t)` on a logarithmic time axis.
pub fn envelope(table: &NumericTable) -> CliResult<String> {
    let (t, lo, hi) = (require(table, "t")?, require(table, "c_min")?, require(table, "c_max")?);
    let rows: Vec<&Vec<f64>> = table.rows.iter().filter(|r| r[t] > 0.0).collect();
    let xs = Scale::fit(rows.iter().map(|r| r[t]), true).ok_or_else(|| input_err("no positive times"))?;
    let ys = Scale::fit(rows.iter().flat_map(|r| [r[lo], r[hi]]), false).ok_or_else(|| input_err("no finite values"))?;
    let mut canvas = Canvas::new(xs, ys, "Envelope", "t", "u t^{1/(m-1)} / Phi1^{1/m}");
    for (k, (col, name)) in [(lo, "c_min"), (hi, "c_max")].into_iter().enumerate() {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[t], r[col])).collect();
        canvas.polyline(&pts, COLORS[k]);
        canvas.legend(k, name, COLORS[k]);
    }
    Ok(canvas.finish())
}

/// Log-log scatter of `u` against `d` with the fitted line and its slope.
pub fn exponent(table: &NumericTable) -> CliResult<String> {
    let (d, u) = (require(table, "d")?, require(table, "u")?);
    let pts: Vec<(f64, f64)> = table.rows.iter().map(|r| (r[d], r[u])).collect();
    let (slope, intercept) = log_log_fit(&pts).ok_or_else(|| input_err("need two points with d > 0 and u > 0"))?;
    let xs = Scale::fit(pts.iter().map(|p| p.0), true).expect("fit found positive points");
    let ys = Scale::fit(pts.iter().map(|p| p.1), true).expect("fit found positive points");
    let mut canvas = Canvas::new(xs, ys, "Boundary exponent", "d(x)", "u");
    canvas.scatter(&pts, COLORS[0]);
    let (x0, x1) = (10f64.powf(xs.lo), 10f64.powf(xs.hi));
    let line = |x: f64| (intercept + slope * x.ln()).exp();
    canvas.polyline(&[(x0, line(x0)), (x1, line(x1))], COLORS[1]);
    canvas.legend(0, &format!("slope {slope:.3}"), COLORS[1]);
    Ok(canvas.finish())
}
