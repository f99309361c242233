//! Self-contained SVG line charts of summarized curves.

use std::fmt::Write;

use super::summary::AgentSummary;
use crate::error::{invalid, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 720.0,
            height: 440.0,
            title: String::new(),
            x_label: "step".into(),
            y_label: "cumulative regret".into(),
            log_x: false,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    left: f64,
    top: f64,
    w: f64,
    h: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Frame {
    fn tx(&self, x: f64) -> f64 {
        let (x, a, b) = if self.log_x {
            (x.max(1.0).ln(), self.x0.max(1.0).ln(), self.x1.max(1.0).ln())
        } else {
            (x, self.x0, self.x1)
        };
        let span = if b > a { b - a } else { 1.0 };
        self.left + (x - a) / span * self.w
    }

    fn ty(&self, y: f64) -> f64 {
        let span = if self.y1 > self.y0 { self.y1 - self.y0 } else { 1.0 };
        self.top + self.h - (y - self.y0) / span * self.h
    }
}

/// Renders one polyline per agent with a shaded mean +/- 1 std band, axes
/// with end labels, and a legend. Coordinates are printed with two decimals
/// so the output is byte-stable.
pub fn render_curves(summary: &[AgentSummary], style: &PlotStyle) -> Result<String> {
    if summary.is_empty() || summary.iter().all(|a| a.steps.is_empty()) {
        return Err(invalid("nothing to plot"));
    }
    let points = summary.iter().flat_map(|a| a.steps.iter().enumerate().map(move |(i, &s)| (s, a, i)));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for (s, a, i) in points {
        x0 = x0.min(s as f64);
        x1 = x1.max(s as f64);
        y0 = y0.min(a.mean[i] - a.std[i]);
        y1 = y1.max(a.mean[i] + a.std[i]);
    }
    let f = Frame {
        left: 70.0,
        top: 40.0,
        w: style.width - 70.0 - 150.0,
        h: style.height - 40.0 - 60.0,
        x0,
        x1,
        y0,
        y1,
        log_x: style.log_x,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif" font-size="12">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            f.left + f.w / 2.0,
            escape(&style.title)
        );
    }
    // Axes with labelled extremes.
    let (bx, by) = (f.left, f.top + f.h);
    let _ = writeln!(
        out,
        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}" fill="none" stroke="black"/>"#,
        f.left,
        f.top,
        bx,
        by,
        f.left + f.w,
        by
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{x}</text>"#,
            f.tx(x),
            by + 16.0
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            f.left - 6.0,
            f.ty(y) + 4.0,
            y
        );
    }
    let x_label = if style.log_x {
        format!("{} (log scale)", style.x_label)
    } else {
        style.x_label.clone()
    };
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        f.left + f.w / 2.0,
        by + 40.0,
        escape(&x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        f.top + f.h / 2.0,
        f.top + f.h / 2.0,
        escape(&style.y_label)
    );

    for (k, a) in summary.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper = (0..a.steps.len()).map(|i| (a.steps[i], a.mean[i] + a.std[i]));
        let lower = (0..a.steps.len()).rev().map(|i| (a.steps[i], a.mean[i] - a.std[i]));
        let band: Vec<String> = upper
            .chain(lower)
            .map(|(s, y)| format!("{:.2},{:.2}", f.tx(s as f64), f.ty(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = (0..a.steps.len())
            .map(|i| format!("{:.2},{:.2}", f.tx(a.steps[i] as f64), f.ty(a.mean[i])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = f.top + 10.0 + 20.0 * k as f64;
        let lx = f.left + f.w + 16.0;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx,
            ly,
            lx + 20.0,
            ly
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&a.agent)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
