//! Minimal deterministic SVG line and box plots.

use std::fmt::Write;

use crate::stats;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Default)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Lower and upper band edges, drawn shaded behind the line.
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines.
    pub hlines: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        } else if !log {
            let pad = 0.05 * (hi - lo);
            (lo, hi) = (lo - pad, hi + pad);
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo.ceil() as i32..=self.hi.floor() as i32).map(|e| 10f64.powi(e)).collect();
        }
        let span = self.hi - self.lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn px(ax: &Axis, v: f64) -> f64 {
    LEFT + ax.frac(v) * (W - LEFT - RIGHT)
}

fn py(ax: &Axis, v: f64) -> f64 {
    H - BOTTOM - ax.frac(v) * (H - TOP - BOTTOM)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>
<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>
"#,
        W / 2.0,
        esc(title),
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 12.0,
        esc(x_label),
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        esc(y_label),
        W - LEFT - RIGHT,
        H - TOP - BOTTOM,
    );
}

fn y_ticks(out: &mut String, ay: &Axis) {
    for t in ay.ticks() {
        let y = py(ay, t);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            label(t)
        );
    }
}

impl LinePlot {
    pub fn render(&self) -> String {
        let xs = || self.series.iter().flat_map(|s| s.x.iter().copied());
        let ys = || {
            self.series
                .iter()
                .flat_map(|s| {
                    let band = s.band.iter().flat_map(|(l, h)| l.iter().chain(h.iter()).copied());
                    s.y.iter().copied().chain(band)
                })
                .chain(self.hlines.iter().copied())
        };
        let ax = Axis::fit(xs(), self.log_x);
        let ay = Axis::fit(ys(), false);
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label);
        y_ticks(&mut out, &ay);
        for t in ax.ticks() {
            let x = px(&ax, t);
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                H - BOTTOM + 16.0,
                label(t)
            );
        }
        for &h in &self.hlines {
            let y = py(&ay, h);
            let _ = writeln!(
                out,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
                W - RIGHT
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            if let Some((lo, hi)) = &s.band {
                let mut pts: Vec<String> = s.x.iter().zip(hi).map(|(&x, &y)| format!("{:.2},{:.2}", px(&ax, x), py(&ay, y))).collect();
                pts.extend(s.x.iter().zip(lo).rev().map(|(&x, &y)| format!("{:.2},{:.2}", px(&ax, x), py(&ay, y))));
                let _ = writeln!(out, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, pts.join(" "));
            }
            let pts: Vec<String> = s
                .x
                .iter()
                .zip(&s.y)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(&ax, x), py(&ay, y)))
                .collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
                LEFT + 8.0,
                TOP + 16.0 + 14.0 * k as f64,
                esc(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Box-and-whisker plot; whiskers span the full range.
#[derive(Debug, Clone, Default)]
pub struct BoxPlot {
    pub title: String,
    pub y_label: String,
    pub groups: Vec<(String, Vec<f64>)>,
}

impl BoxPlot {
    pub fn render(&self) -> String {
        let ay = Axis::fit(self.groups.iter().flat_map(|(_, v)| v.iter().copied()), false);
        let mut out = String::new();
        frame(&mut out, &self.title, "", &self.y_label);
        y_ticks(&mut out, &ay);
        let n = self.groups.len().max(1) as f64;
        let slot = (W - LEFT - RIGHT) / n;
        for (k, (name, v)) in self.groups.iter().enumerate() {
            let cx = LEFT + slot * (k as f64 + 0.5);
            let _ = writeln!(out, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, H - BOTTOM + 16.0, esc(name));
            let Ok(q) = stats::quartiles(v) else { continue };
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let half = (slot * 0.25).min(40.0);
            let color = PALETTE[k % PALETTE.len()];
            let _ = writeln!(
                out,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                py(&ay, lo),
                py(&ay, hi)
            );
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.4" stroke="black"/>"#,
                cx - half,
                py(&ay, q.q3),
                2.0 * half,
                (py(&ay, q.q1) - py(&ay, q.q3)).max(0.0)
            );
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
                cx - half,
                py(&ay, q.median),
                cx + half,
                py(&ay, q.median)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
