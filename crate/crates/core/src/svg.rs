//! Minimal SVG overlays of polylines for visual inspection.

use std::fmt::Write;

use crate::geom::Point2;

pub struct Layer<'a> {
    pub label: &'a str,
    pub points: &'a [Point2],
    pub closed: bool,
    pub color: &'a str,
    /// Draw vertex markers.
    pub markers: bool,
}

/// One panel per group of layers, laid out left to right. The y axis points
/// up (forward).
pub fn render_panels(panels: &[(String, Vec<Layer<'_>>)], panel_size: f64) -> String {
    let pad = 0.08 * panel_size;
    let width = panel_size * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{h}" viewBox="0 0 {width} {h}">"#,
        h = panel_size + 20.0
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (title, layers)) in panels.iter().enumerate() {
        let all: Vec<&Point2> = layers.iter().flat_map(|l| l.points.iter()).collect();
        if all.is_empty() {
            continue;
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &all {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-6);
        let scale = (panel_size - 2.0 * pad) / span;
        let ox = i as f64 * panel_size + pad;
        let map = |p: &Point2| (ox + (p.x - x0) * scale, 20.0 + pad + (y1 - p.y) * scale);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="14" font-family="sans-serif" font-size="12">{}</text>"#,
            ox,
            escape(title)
        );
        for l in layers {
            let coords: Vec<String> = l
                .points
                .iter()
                .map(|p| {
                    let (x, y) = map(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let tag = if l.closed { "polygon" } else { "polyline" };
            let _ = writeln!(
                out,
                r#"<{tag} points="{}" fill="none" stroke="{}" stroke-width="1.5"><title>{}</title></{tag}>"#,
                coords.join(" "),
                l.color,
                escape(l.label)
            );
            if l.markers {
                for p in l.points {
                    let (x, y) = map(p);
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#,
                        l.color
                    );
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
