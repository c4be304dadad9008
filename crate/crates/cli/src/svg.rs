//! Deterministic SVG plots drawn from the CSV files the commands export.
//!
//! The layer style follows from the CSV header, so a plot can be rebuilt from
//! the files of a run directory alone.

use std::fmt::Write as _;

use crate::error::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 48.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const GRAY: &str = "#b0b0b0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Residual norms against the iteration, log-scaled.
    Convergence,
    /// Curves and points in the complex plane, equal aspect.
    Plane,
}

#[derive(Debug, Clone)]
enum Mark {
    Line { color: String, width: f64, dashed: bool },
    Dots { color: String, radius: f64 },
}

#[derive(Debug, Clone)]
struct Series {
    points: Vec<(f64, f64)>,
    mark: Mark,
    layer: u8,
    /// Bound curves may start far above the data; they do not raise the axis.
    overlay: bool,
}

fn parse(name: &str, text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let bad = |msg: String| CliError::Validation(format!("{name}: {msg}"));
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> =
        reader.headers().map_err(|e| bad(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let row = record
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("row {}: `{v}` is not a number", i + 1))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn group_by(rows: &[Vec<f64>], key: usize, x: usize, y: usize) -> Vec<(f64, Vec<(f64, f64)>)> {
    let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(k, _)| *k == r[key]) {
            Some((_, pts)) => pts.push((r[x], r[y])),
            None => groups.push((r[key], vec![(r[x], r[y])])),
        }
    }
    groups
}

fn circle(cx: f64, cy: f64, r: f64) -> Vec<(f64, f64)> {
    (0..=96).map(|k| {
        let t = 2.0 * std::f64::consts::PI * k as f64 / 96.0;
        (cx + r * t.cos(), cy + r * t.sin())
    })
    .collect()
}

fn series_from(index: usize, name: &str, text: &str) -> Result<Vec<Series>, CliError> {
    let (header, rows) = parse(name, text)?;
    let color = PALETTE[index % PALETTE.len()].to_string();
    let line = |color: &str, width: f64, dashed: bool| Mark::Line { color: color.to_string(), width, dashed };
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let out = match h.as_slice() {
        ["iteration", "residual_norm"] => vec![Series {
            points: rows.iter().map(|r| (r[0], r[1])).collect(),
            mark: line("#000000", 2.0, false),
            layer: 2,
            overlay: false,
        }],
        ["trial", "iteration", "residual_norm"] => group_by(&rows, 0, 1, 2)
            .into_iter()
            .map(|(_, points)| Series { points, mark: line(GRAY, 1.0, false), layer: 0, overlay: false })
            .collect(),
        ["m", "delta", "C_m", "bound_total"] => group_by(&rows, 1, 0, 3)
            .into_iter()
            .enumerate()
            .map(|(k, (_, points))| Series { points, mark: line(PALETTE[k % PALETTE.len()], 1.5, false), layer: 1, overlay: true })
            .collect(),
        ["step", "f_norm", "rank", "gmres_iters", "lambda"] => vec![Series {
            points: rows.iter().map(|r| (r[0], r[1])).collect(),
            mark: line("#000000", 2.0, false),
            layer: 2,
            overlay: false,
        }],
        ["component", "re", "im"] => group_by(&rows, 0, 1, 2)
            .into_iter()
            .map(|(_, points)| Series { points, mark: line(&color, 1.5, false), layer: 1, overlay: false })
            .collect(),
        ["re", "im", "radius"] => rows
            .iter()
            .map(|r| Series { points: circle(r[0], r[1], r[2]), mark: line(GRAY, 1.0, true), layer: 0, overlay: false })
            .collect(),
        ["re", "im", "multiplicity", "kappa"] => vec![Series {
            points: rows.iter().map(|r| (r[0], r[1])).collect(),
            mark: Mark::Dots { color: "#000000".into(), radius: 3.0 },
            layer: 2,
            overlay: false,
        }],
        ["re", "im"] => vec![Series {
            points: rows.iter().map(|r| (r[0], r[1])).collect(),
            mark: Mark::Dots { color, radius: 2.5 },
            layer: 3,
            overlay: false,
        }],
        _ => return Err(CliError::Validation(format!("{name}: unrecognized CSV header `{}`", header.join(",")))),
    };
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool, fallback: (f64, f64)) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = fallback;
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Self { lo, hi, log }
    }

    fn pad(mut self, frac: f64) -> Self {
        let d = (self.hi - self.lo) * frac;
        self.lo -= d;
        self.hi += d;
        self
    }

    fn map(&self, v: f64, from: f64, to: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        Some(from + (v - self.lo) / (self.hi - self.lo) * (to - from))
    }

    /// Tick positions (in axis units) and labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let span = (self.hi - self.lo).round() as i64;
            let every = (span / 8).max(1);
            let first = self.lo.ceil() as i64;
            return (first..=self.hi.floor() as i64)
                .filter(|k| (k - first) % every == 0)
                .map(|k| (10f64.powi(k as i32), format!("1e{k}")))
                .collect();
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|s| s * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        let mut out = Vec::new();
        let mut k = (self.lo / step).ceil();
        while k * step <= self.hi + 1e-9 * step {
            let v = k * step;
            let v = if v.abs() < 1e-12 * step { 0.0 } else { v };
            out.push((v, format!("{v:.decimals$}")));
            k += 1.0;
        }
        out
    }
}

/// Renders the CSV `inputs` (name, contents) into one SVG document.
pub fn plot_csv(kind: PlotKind, title: &str, inputs: &[(String, String)]) -> Result<String, CliError> {
    let mut series = Vec::new();
    for (i, (name, text)) in inputs.iter().enumerate() {
        series.extend(series_from(i, name, text)?);
    }
    series.sort_by_key(|s| s.layer);
    Ok(render(kind, title, &series))
}

fn render(kind: PlotKind, title: &str, series: &[Series]) -> String {
    let xs = || series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = || series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x_from, x_to) = (LEFT, WIDTH - RIGHT);
    let (y_from, y_to) = (HEIGHT - BOTTOM, TOP);
    let (x_axis, y_axis) = match kind {
        PlotKind::Convergence => {
            let mut ya = Axis::fit(ys(), true, (-12.0, 0.0));
            let data = series.iter().filter(|s| !s.overlay).flat_map(|s| s.points.iter().map(|p| p.1));
            if series.iter().any(|s| !s.overlay && !s.points.is_empty()) {
                ya.hi = ya.hi.min(Axis::fit(data, true, (-12.0, 0.0)).hi + 1.0);
            }
            (Axis::fit(xs(), false, (0.0, 10.0)), ya)
        }
        PlotKind::Plane => {
            let mut xa = Axis::fit(xs(), false, (-1.0, 1.0)).pad(0.05);
            let mut ya = Axis::fit(ys(), false, (-1.0, 1.0)).pad(0.05);
            let sx = (xa.hi - xa.lo) / (x_to - x_from);
            let sy = (ya.hi - ya.lo) / (y_from - y_to);
            if sx > sy {
                let c = 0.5 * (ya.lo + ya.hi);
                let h = 0.5 * sx * (y_from - y_to);
                (ya.lo, ya.hi) = (c - h, c + h);
            } else {
                let c = 0.5 * (xa.lo + xa.hi);
                let h = 0.5 * sy * (x_to - x_from);
                (xa.lo, xa.hi) = (c - h, c + h);
            }
            (xa, ya)
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if !title.is_empty() {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="14" text-anchor="middle">{}</text>"#, 0.5 * WIDTH, escape(title));
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000"/>"##,
        x_to - x_from,
        y_from - y_to
    );
    for (v, label) in x_axis.ticks() {
        if let Some(px) = x_axis.map(v, x_from, x_to) {
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.2}" y1="{y_from:.2}" x2="{px:.2}" y2="{:.2}" stroke="#000000"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
                y_from + 4.0,
                y_from + 16.0
            );
        }
    }
    for (v, label) in y_axis.ticks() {
        if let Some(py) = y_axis.map(v, y_from, y_to) {
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{py:.2}" x2="{x_from:.2}" y2="{py:.2}" stroke="#000000"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
                x_from - 4.0,
                x_from - 6.0,
                py + 4.0
            );
        }
    }
    let (xl, yl) = match kind {
        PlotKind::Convergence => ("iteration", "residual norm"),
        PlotKind::Plane => ("Re", "Im"),
    };
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xl}</text>"#, 0.5 * (x_from + x_to), HEIGHT - 8.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{yl}</text>"#,
        0.5 * (y_from + y_to),
        0.5 * (y_from + y_to)
    );

    let _ = writeln!(
        svg,
        r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}"/></clipPath><g clip-path="url(#plot)">"#,
        x_to - x_from,
        y_from - y_to
    );
    for s in series {
        let pts: Vec<Option<(f64, f64)>> = s
            .points
            .iter()
            .map(|&(x, y)| Some((x_axis.map(x, x_from, x_to)?, y_axis.map(y, y_from, y_to)?)))
            .collect();
        match &s.mark {
            Mark::Line { color, width, dashed } => {
                let dash = if *dashed { r#" stroke-dasharray="4 3""# } else { "" };
                for run in pts.split(Option::is_none).filter(|r| r.len() > 1) {
                    let coords: Vec<String> =
                        run.iter().flatten().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        svg,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
                        coords.join(" ")
                    );
                }
            }
            Mark::Dots { color, radius } => {
                for (x, y) in pts.iter().flatten() {
                    let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}" fill="{color}"/>"#);
                }
            }
        }
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
