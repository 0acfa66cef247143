//! Standalone SVG figures: sweep curves, phase regions and scatter plots
//! with a fitted quadratic. Plain string output, no rendering dependency.

use std::fmt::Write as _;

use crate::model::{PhaseCell, SweepRow, Thresholds};

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

struct Canvas {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

impl Canvas {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = if y.1 > y.0 { 0.05 * (y.1 - y.0) } else { 1.0 };
        Self { x, y: (y.0 - pad, y.1 + pad), body: String::new() }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dash: bool) {
        let mut d = String::new();
        for &(x, y) in pts.iter().filter(|p| p.1.is_finite()) {
            let _ = write!(d, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        let dash = if dash { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(self.body, r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#, d.trim_end());
    }

    fn band(&mut self, x0: f64, x1: f64, color: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let _ = writeln!(
            self.body,
            r#"<rect x="{a:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="{color}" fill-opacity="0.25"/>"#,
            b - a,
            H - 2.0 * MARGIN
        );
    }

    fn vline(&mut self, x: f64, color: &str, label: &str) {
        let p = self.px(x);
        let _ = writeln!(self.body, r#"<line x1="{p:.2}" y1="{MARGIN}" x2="{p:.2}" y2="{}" stroke="{color}" stroke-dasharray="3 3"/>"#, H - MARGIN);
        let _ = writeln!(self.body, r#"<text x="{:.2}" y="{}" font-size="12" fill="{color}">{label}</text>"#, p + 3.0, MARGIN + 14.0);
    }

    fn hline(&mut self, y: f64, color: &str) {
        let p = self.py(y);
        let _ = writeln!(self.body, r#"<line x1="{MARGIN}" y1="{p:.2}" x2="{}" y2="{p:.2}" stroke="{color}"/>"#, W - MARGIN);
    }

    fn dot(&mut self, x: f64, y: f64) {
        let _ = writeln!(self.body, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#4c72b0" fill-opacity="0.35"/>"##, self.px(x), self.py(y));
    }

    fn finish(self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        s.push_str(&self.body);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        for (v, anchor) in [(self.x.0, "start"), (self.x.1, "end")] {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="{anchor}">{}</text>"#, self.px(v), H - MARGIN + 14.0, tick(v));
        }
        for v in [self.y.0, self.y.1] {
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, MARGIN - 4.0, self.py(v) + 4.0, tick(v));
        }
        let _ = writeln!(s, r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// f and h against the group size; sizes where access is granted are shaded.
pub fn sweep_svg(rows: &[SweepRow], thresholds: Option<&Thresholds>) -> String {
    let (lo, hi) = bounds(rows.iter().flat_map(|r| [r.f, r.h, 0.0]));
    let mut c = Canvas::new((0.0, 1.0), (lo, hi));
    let mut start: Option<usize> = None;
    for i in 0..=rows.len() {
        let granted = rows.get(i).is_some_and(|r| r.grants_access);
        match (granted, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let left = if s == 0 { 0.0 } else { 0.5 * (rows[s - 1].delta + rows[s].delta) };
                let right = if i == rows.len() { 1.0 } else { 0.5 * (rows[i - 1].delta + rows[i].delta) };
                c.band(left, right, "#55a868");
                start = None;
            }
            _ => {}
        }
    }
    c.hline(0.0, "#888888");
    c.polyline(&rows.iter().map(|r| (r.delta, r.f)).collect::<Vec<_>>(), "#4c72b0", true);
    c.polyline(&rows.iter().map(|r| (r.delta, r.h)).collect::<Vec<_>>(), "#c44e52", false);
    if let Some(t) = thresholds {
        c.vline(t.delta_star, "#4c72b0", "δ*");
        c.vline(t.delta_bar, "#c44e52", "δ̄");
    }
    c.finish("f (dashed) and h (solid); shaded: access granted", "relative size δ", "payoff difference")
}

/// Decision regions over (δ, γ); granted cells green, limited cells grey.
pub fn phase_svg(cells: &[PhaseCell], gamma_star: Option<f64>) -> String {
    let (glo, ghi) = bounds(cells.iter().map(|c| c.gamma));
    let mut c = Canvas::new((0.0, 1.0), (glo, ghi));
    let mut deltas: Vec<f64> = cells.iter().map(|c| c.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut gammas: Vec<f64> = cells.iter().map(|c| c.gamma).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let dw = (W - 2.0 * MARGIN) / deltas.len().max(1) as f64;
    let gh = (H - 2.0 * MARGIN) / gammas.len().max(1) as f64 * (ghi - glo) / (c.y.1 - c.y.0).max(f64::MIN_POSITIVE);
    for cell in cells {
        let color = if cell.grants_access { "#55a868" } else { "#cccccc" };
        let (x, y) = (c.px(cell.delta) - dw / 2.0, c.py(cell.gamma) - gh / 2.0);
        let _ = writeln!(c.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#, dw + 0.5, gh + 0.5);
    }
    if let Some(g) = gamma_star {
        if g >= glo && g <= ghi {
            c.hline(g, "#c44e52");
        }
    }
    c.finish("access granted (green) by size and institutional constraint", "relative size δ", "γ")
}

/// Scatter of (x, y) points with an optional fitted quadratic `a + b1 x + b2 x^2`.
pub fn scatter_quadratic_svg(points: &[(f64, f64)], curve: Option<(f64, f64, f64)>, title: &str) -> String {
    let (xlo, xhi) = bounds(points.iter().map(|p| p.0));
    let (xlo, xhi) = if xlo < xhi { (xlo.min(0.0), xhi) } else { (0.0, 1.0) };
    let mut ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let grid: Vec<f64> = (0..=100).map(|i| xlo + (xhi - xlo) * i as f64 / 100.0).collect();
    let fitted: Vec<(f64, f64)> = curve.map_or(Vec::new(), |(a, b1, b2)| grid.iter().map(|&x| (x, a + b1 * x + b2 * x * x)).collect());
    ys.extend(fitted.iter().map(|p| p.1));
    let (ylo, yhi) = bounds(ys.into_iter());
    let mut c = Canvas::new((xlo, xhi), if ylo < yhi { (ylo, yhi) } else { (ylo - 1.0, ylo + 1.0) });
    for &(x, y) in points {
        c.dot(x, y);
    }
    if !fitted.is_empty() {
        c.polyline(&fitted, "#c44e52", false);
    }
    c.finish(title, "relative size", "access to power")
}
