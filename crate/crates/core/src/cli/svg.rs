//! Self-contained SVG line charts of risk curves.

use std::fmt::Write as _;

use thiserror::Error;

use crate::bounds::BoundSpec;
use crate::harness::{PhaseDiagram, RiskCurve, RiskPoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SvgError {
    #[error("cannot plot an empty curve")]
    EmptyCurve,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Series<'a> {
    label: String,
    points: &'a [RiskPoint],
}

fn draw(series: &[Series<'_>], bounds: &[BoundSpec]) -> Result<String, SvgError> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(SvgError::EmptyCurve);
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_hi: f64 = 1.0;
    for p in all {
        x_lo = x_lo.min(p.mu);
        x_hi = x_hi.max(p.mu);
        y_hi = y_hi.max(p.risk + p.se);
    }
    for b in bounds {
        x_lo = x_lo.min(b.value);
        x_hi = x_hi.max(b.value);
    }
    if x_hi - x_lo < 1e-12 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (1.0 - y / y_hi) * plot_h;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(out, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let _ = writeln!(out, "</g>");
    for k in 0..=4 {
        let xv = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let yv = y_hi * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#,
            sx(xv),
            y0 + 15.0
        );
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            x0 - 5.0,
            sy(yv) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">μ</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">risk</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut legend_y = TOP + 10.0;
    let legend_x = x1 + 15.0;
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.mu), sy(p.risk)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="curve" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        for p in s.points {
            let _ = writeln!(
                out,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(p.mu),
                sy(p.risk)
            );
        }
        let _ = writeln!(
            out,
            r#"<text class="legend" x="{legend_x:.2}" y="{legend_y:.2}" fill="{color}">{}</text>"#,
            escape(&s.label)
        );
        legend_y += 16.0;
    }
    for (k, b) in bounds.iter().enumerate() {
        let x = sx(b.value);
        let dash = ["6,3", "2,2", "8,2,2,2"][k % 3];
        let _ = writeln!(
            out,
            r#"<line class="bound" x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="gray" stroke-dasharray="{dash}"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text class="legend" x="{legend_x:.2}" y="{legend_y:.2}" fill="gray">{} = {:.4}</text>"#,
            escape(&b.name),
            b.value
        );
        legend_y += 16.0;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Risk against `μ`, with each bound drawn as a vertical reference line.
pub fn render_svg(curve: &RiskCurve, bounds: &[BoundSpec]) -> Result<String, SvgError> {
    draw(
        &[Series {
            label: format!("{} (s = {})", curve.metadata.config.strategy, curve.s),
            points: &curve.points,
        }],
        bounds,
    )
}

/// One curve per sparsity of the diagram.
pub fn render_phase_svg(diagram: &PhaseDiagram, bounds: &[BoundSpec]) -> Result<String, SvgError> {
    let series: Vec<Series<'_>> = diagram
        .rows
        .iter()
        .map(|r| Series {
            label: format!("s = {}", r.s),
            points: &r.points,
        })
        .collect();
    draw(&series, bounds)
}
