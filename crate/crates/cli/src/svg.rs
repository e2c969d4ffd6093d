//! Static SVG scatter of operating points with per-model non-dominated staircases.

use std::fmt::Write;

use sgrpo_core::frontier::non_dominated;
use sgrpo_core::OperatingPoint64;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [OperatingPoint64],
}

/// Axis bounds padded around every point and the reference.
fn bounds(series: &[Series<'_>], reference: (f64, f64)) -> (f64, f64, f64, f64) {
    let (mut u0, mut u1, mut v0, mut v1) = (reference.0, reference.0, reference.1, reference.1);
    for p in series.iter().flat_map(|s| s.points.iter()) {
        u0 = u0.min(p.utility);
        u1 = u1.max(p.utility);
        v0 = v0.min(p.diversity);
        v1 = v1.max(p.diversity);
    }
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).max(1e-3);
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (u0, u1) = pad(u0, u1);
    let (v0, v1) = pad(v0, v1);
    (u0, u1, v0, v1)
}

/// Renders utility on x, diversity on y. Each model gets one `<polyline>`
/// tracing its non-dominated staircase and one `<circle>` per operating point.
pub fn render(series: &[Series<'_>], reference: (f64, f64)) -> String {
    let (u0, u1, v0, v1) = bounds(series, reference);
    let x = |u: f64| MARGIN + (u - u0) / (u1 - u0) * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - v0) / (v1 - v0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<g stroke="black" stroke-width="1">
<line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}"/>
<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}"/>
</g>
<g font-family="sans-serif" font-size="12">
<text x="{cx}" y="{ly}" text-anchor="middle">utility U</text>
<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">diversity V</text>
<text x="{MARGIN}" y="{ty}" text-anchor="middle">{u0:.3}</text>
<text x="{r}" y="{ty}" text-anchor="middle">{u1:.3}</text>
<text x="{tx}" y="{b}" text-anchor="end">{v0:.3}</text>
<text x="{tx}" y="{MARGIN}" text-anchor="end">{v1:.3}</text>
</g>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        cx = WIDTH / 2.0,
        ly = HEIGHT - 12.0,
        cy = HEIGHT / 2.0,
        ty = HEIGHT - MARGIN + 16.0,
        tx = MARGIN - 6.0,
    )
    .unwrap();
    writeln!(
        out,
        r#"<circle class="reference" cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="gray"/>"#,
        x(reference.0),
        y(reference.1)
    )
    .unwrap();

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut nd = non_dominated(s.points);
        // best utility last so the staircase runs left to right
        nd.sort_by(|a, b| a.utility.total_cmp(&b.utility));
        let coords: Vec<String> = staircase(&nd).iter().map(|&(u, v)| format!("{:.2},{:.2}", x(u), y(v))).collect();
        writeln!(out, r#"<g class="model" data-model="{}">"#, escape(s.name)).unwrap();
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="5,3"/>"#,
            coords.join(" ")
        )
        .unwrap();
        for p in s.points {
            writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"><title>τ={} seed={}</title></circle>"#,
                x(p.utility),
                y(p.diversity),
                p.decode.temperature,
                p.decode.seed
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 100.0,
            MARGIN + 16.0 * idx as f64,
            escape(s.name)
        )
        .unwrap();
        writeln!(out, "</g>").unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Corners of the dominated region's boundary for points sorted by utility:
/// moving right, diversity can only drop.
fn staircase(nd_by_utility: &[OperatingPoint64]) -> Vec<(f64, f64)> {
    let mut path = Vec::with_capacity(2 * nd_by_utility.len());
    for (i, p) in nd_by_utility.iter().enumerate() {
        if i > 0 {
            path.push((nd_by_utility[i - 1].utility, p.diversity));
        }
        path.push((p.utility, p.diversity));
    }
    path
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_model_and_one_marker_per_point() {
        let a = [OperatingPoint64::at(0.2, 0.9), OperatingPoint64::at(0.6, 0.5), OperatingPoint64::at(0.3, 0.3)];
        let b = [OperatingPoint64::at(0.8, 0.2)];
        let svg = render(
            &[Series { name: "grpo", points: &a }, Series { name: "sgrpo", points: &b }],
            (0.2, 0.2),
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle cx").count(), 4);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn staircase_steps_down() {
        let nd = [OperatingPoint64::at(0.2, 0.9), OperatingPoint64::at(0.6, 0.5)];
        assert_eq!(staircase(&nd), vec![(0.2, 0.9), (0.2, 0.5), (0.6, 0.5)]);
    }

    #[test]
    fn names_are_escaped() {
        assert_eq!(escape("a<b>&\""), "a&lt;b&gt;&amp;&quot;");
    }
}
