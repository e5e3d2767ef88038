//! Static SVG rendering of sweep results: error probability against the
//! swept value with 95% interval whiskers, one polyline per series.
//!
//! An axis is logarithmic when all its data are positive, linear otherwise.
//! Output depends only on the result, so rendering a parsed CSV reproduces
//! the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use super::SweepResult;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Axis {
    fn new(data: &[f64], positive_floor: Option<f64>, pixel_lo: f64, pixel_hi: f64) -> Self {
        let log = data.iter().all(|v| *v > 0.0);
        let t = |v: f64| if log { v.log10() } else { v };
        let mut lo = data.iter().copied().map(t).fold(f64::INFINITY, f64::min);
        let mut hi = data.iter().copied().map(t).fold(f64::NEG_INFINITY, f64::max);
        if let (true, Some(floor)) = (log, positive_floor) {
            lo = lo.min(floor.log10());
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
            if hi <= lo {
                hi = lo + 1.0;
            }
        } else {
            let span = hi - lo;
            let pad = if span > 0.0 { 0.05 * span } else { f64::max(0.5, 0.1 * hi.abs()) };
            lo -= pad;
            hi += pad;
        }
        Self {
            log,
            lo,
            hi,
            pixel_lo,
            pixel_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let t = if self.log {
            if v > 0.0 {
                v.log10()
            } else {
                self.lo
            }
        } else {
            v
        };
        let t = t.clamp(self.lo, self.hi);
        self.pixel_lo + (t - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i32..=self.hi as i32)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            (0..=4)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                    (v, trim(v))
                })
                .collect()
        }
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(result: &SweepResult) -> Result<String> {
    if result.is_empty() {
        return Err(Error::Precondition("cannot plot an empty sweep result".into()));
    }
    let rows = || result.series.iter().flat_map(|s| s.rows.iter());
    let xs: Vec<f64> = rows().map(|r| r.value).collect();
    let mut ys: Vec<f64> = rows().map(|r| r.p_e).collect();
    ys.extend(rows().map(|r| r.p_e + r.ci_halfwidth));
    let floor = rows().map(|r| r.p_e - r.ci_halfwidth).filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = floor.is_finite().then_some(floor);
    let x = Axis::new(&xs, None, LEFT, WIDTH - RIGHT);
    let y = Axis::new(&ys, floor, HEIGHT - BOTTOM, TOP);

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        w,
        r#"<rect x="{x0}" y="{y1}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for (v, label) in x.ticks() {
        let px = x.map(v);
        let _ = writeln!(
            w,
            r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
            y0 + 5.0,
            y0 + 19.0
        );
    }
    for (v, label) in y.ticks() {
        let py = y.map(v);
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(&result.variable)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">P_e</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (i, s) in result.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = s.rows.iter().map(|r| (x.map(r.value), y.map(r.p_e))).collect();
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for (r, (px, py)) in s.rows.iter().zip(&pts) {
            let top = y.map(r.p_e + r.ci_halfwidth);
            let bottom = y.map(r.p_e - r.ci_halfwidth);
            let _ = writeln!(
                w,
                r#"<line x1="{px:.2}" y1="{top:.2}" x2="{px:.2}" y2="{bottom:.2}" stroke="{color}"/><circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#
            );
        }
        if !s.label.is_empty() {
            let ly = TOP + 16.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 14.0;
            let _ = writeln!(
                w,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 4.0,
                lx + 20.0,
                ly - 4.0,
                lx + 26.0,
                escape(&s.label)
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    let svg = render_svg(result)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
