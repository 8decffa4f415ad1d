//! Minimal SVG renderings of experiment summaries.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];

/// One polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    /// Fixed y range; derived from the data when absent.
    pub y_range: Option<(f64, f64)>,
    /// Horizontal reference line (e.g. the nominal level).
    pub reference: Option<f64>,
    pub series: Vec<Series>,
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * span { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
}

fn y_axis(out: &mut String, lo: f64, hi: f64, sy: &dyn Fn(f64) -> f64) {
    for t in nice_ticks(lo, hi) {
        let y = sy(t);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, label(t));
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-12 {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    } else {
        let d = 0.05 * (hi - lo);
        (lo - d, hi + d)
    }
}

impl LinePlot {
    pub fn render(&self) -> Result<String> {
        let pts: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().copied()).collect();
        if pts.is_empty() {
            return Err(Error::invalid("nothing to plot"));
        }
        if self.log_x && pts.iter().any(|p| p.0 <= 0.0) {
            return Err(Error::invalid("log axis needs positive x values"));
        }
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let (x_lo, x_hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(tx(p.0)), b.max(tx(p.0))));
        let (x_lo, x_hi) = padded(x_lo, x_hi);
        let (y_lo, y_hi) = self.y_range.unwrap_or_else(|| {
            let (a, b) = pts
                .iter()
                .map(|p| p.1)
                .chain(self.reference)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
            padded(a, b)
        });
        let sx = |x: f64| LEFT + (tx(x) - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
        let sy = |y: f64| H - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label);
        y_axis(&mut out, y_lo, y_hi, &sy);
        let x_ticks: Vec<f64> = if self.log_x {
            (x_lo.ceil() as i64..=x_hi.floor() as i64).map(|e| 10f64.powi(e as i32)).collect()
        } else {
            nice_ticks(x_lo, x_hi)
        };
        for t in x_ticks {
            let x = sx(t);
            let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, label(t));
        }
        if let Some(r) = self.reference {
            let y = sy(r);
            let _ = writeln!(
                out,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
                W - RIGHT
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            for &(x, y) in &s.points {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = W - RIGHT + 12.0;
            let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Five-number summary of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub label: String,
    /// 5%, 25%, 50%, 75% and 95% quantiles.
    pub q: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxPlot {
    pub title: String,
    pub y_label: String,
    pub reference: Option<f64>,
    pub boxes: Vec<BoxStats>,
}

impl BoxPlot {
    pub fn render(&self) -> Result<String> {
        if self.boxes.is_empty() {
            return Err(Error::invalid("nothing to plot"));
        }
        let (lo, hi) = self
            .boxes
            .iter()
            .flat_map(|b| b.q)
            .chain(self.reference)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        let (lo, hi) = padded(lo, hi);
        let sy = |y: f64| H - BOTTOM - (y - lo) / (hi - lo) * (H - TOP - BOTTOM);
        let mut out = String::new();
        frame(&mut out, &self.title, "", &self.y_label);
        y_axis(&mut out, lo, hi, &sy);
        let slot = (W - LEFT - RIGHT) / self.boxes.len() as f64;
        for (i, b) in self.boxes.iter().enumerate() {
            let cx = LEFT + slot * (i as f64 + 0.5);
            let half = (slot * 0.3).min(30.0);
            let color = COLORS[i % COLORS.len()];
            let [q05, q25, q50, q75, q95] = b.q.map(sy);
            let _ = writeln!(out, r#"<line x1="{cx:.2}" y1="{q05:.2}" x2="{cx:.2}" y2="{q95:.2}" stroke="black"/>"#);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{q75:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.4" stroke="black"/>"#,
                cx - half,
                2.0 * half,
                (q25 - q75).max(0.5)
            );
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{q50:.2}" x2="{:.2}" y2="{q50:.2}" stroke="black" stroke-width="2"/>"#,
                cx - half,
                cx + half
            );
            let _ = writeln!(out, r#"<text x="{cx:.2}" y="{}" text-anchor="middle" font-size="10">{}</text>"#, H - BOTTOM + 16.0, escape(&b.label));
        }
        if let Some(r) = self.reference {
            let y = sy(r);
            let _ = writeln!(
                out,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
                W - RIGHT
            );
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(points: Vec<(f64, f64)>) -> LinePlot {
        LinePlot {
            title: "a < b".into(),
            x_label: "n".into(),
            y_label: "p".into(),
            log_x: false,
            y_range: None,
            reference: Some(0.95),
            series: vec![Series { label: "projection".into(), points }],
        }
    }

    #[test]
    fn single_point_plots_one_marker() {
        let svg = plot(vec![(40.0, 0.95)]).render().unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn errors_and_log_axis() {
        assert!(plot(vec![]).render().is_err());
        let mut p = plot(vec![(0.0, 1.0)]);
        p.log_x = true;
        assert!(p.render().is_err());
        p.series[0].points = vec![(1.0, 0.5), (1000.0, 0.7)];
        assert_eq!(p.render().unwrap().matches("<circle").count(), 2);
    }

    #[test]
    fn box_plot_renders_each_group() {
        let b = BoxPlot {
            title: "T".into(),
            y_label: "T".into(),
            reference: Some(2.22),
            boxes: vec![
                BoxStats { label: "true".into(), q: [-1.6, -0.7, 0.0, 0.7, 1.6] },
                BoxStats { label: "false".into(), q: [5.0, 9.0, 12.0, 20.0, 40.0] },
            ],
        };
        assert_eq!(b.render().unwrap().matches("<rect").count(), 2 + 2);
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.0, 1.0);
        assert!(t.len() >= 3 && t[0] >= 0.0 && *t.last().unwrap() <= 1.0 + 1e-9);
    }
}
