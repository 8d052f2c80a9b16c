//! Minimal SVG output: planar chain overlays and bar charts.

use std::fmt::Write;

use crate::chain::Chain;
use crate::complex::CellComplex;
use crate::deform::PLChain;
use crate::error::{Error, Result};
use crate::geometry::Point;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;

/// A drawing layer; chains are drawn in layer order.
pub enum Layer<'a> {
    Complex { stroke: &'a str },
    Chain { chain: &'a Chain, stroke: &'a str, fill: &'a str },
    PL { chain: &'a PLChain, stroke: &'a str },
    Points { points: &'a [Point], fill: &'a str },
}

struct View {
    lo: [f64; 2],
    scale: f64,
}

impl View {
    fn of(k: &CellComplex) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in k.coords() {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        View { lo, scale: (SIZE - 2.0 * MARGIN) / extent }
    }

    fn xy(&self, p: &[f64]) -> (f64, f64) {
        (MARGIN + (p[0] - self.lo[0]) * self.scale, SIZE - MARGIN - (p[1] - self.lo[1]) * self.scale)
    }
}

fn ordered_polygon(k: &CellComplex, id: usize) -> Vec<Point> {
    let mut pts: Vec<Point> = k.cell(2, id).vertices.iter().map(|&v| k.vertex(v).clone()).collect();
    let c = crate::geometry::centroid(&pts);
    pts.sort_by(|a, b| (a[1] - c[1]).atan2(a[0] - c[0]).total_cmp(&(b[1] - c[1]).atan2(b[0] - c[0])));
    pts
}

fn line(out: &mut String, v: &View, a: &[f64], b: &[f64], stroke: &str, width: f64) {
    let (x1, y1) = v.xy(a);
    let (x2, y2) = v.xy(b);
    let _ = writeln!(
        out,
        r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{stroke}" stroke-width="{width}"/>"#
    );
}

/// Overlay of planar layers on a complex in R^2.
pub fn overlay(k: &CellComplex, layers: &[Layer]) -> Result<String> {
    if k.ambient() != 2 {
        return Err(Error::Unsupported(format!("SVG overlays need n = 2, got {}", k.ambient())));
    }
    let v = View::of(k);
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    out.push('\n');
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
    for layer in layers {
        match layer {
            Layer::Complex { stroke } => {
                for e in k.cells(1) {
                    line(&mut out, &v, k.vertex(e.vertices[0]), k.vertex(e.vertices[1]), stroke, 0.5);
                }
            }
            Layer::Chain { chain, stroke, fill } => match chain.dim() {
                0 => {
                    for (id, _) in chain.iter() {
                        let (x, y) = v.xy(k.vertex(id));
                        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{stroke}"/>"#);
                    }
                }
                1 => {
                    for (id, _) in chain.iter() {
                        let e = k.cell(1, id);
                        line(&mut out, &v, k.vertex(e.vertices[0]), k.vertex(e.vertices[1]), stroke, 2.0);
                    }
                }
                _ => {
                    for (id, _) in chain.iter() {
                        let pts: Vec<String> = ordered_polygon(k, id)
                            .iter()
                            .map(|p| {
                                let (x, y) = v.xy(p);
                                format!("{x:.3},{y:.3}")
                            })
                            .collect();
                        let _ = writeln!(
                            out,
                            r#"<polygon points="{}" fill="{fill}" stroke="{stroke}" stroke-width="1"/>"#,
                            pts.join(" ")
                        );
                    }
                }
            },
            Layer::PL { chain, stroke } => {
                for s in chain.simplices() {
                    let m = s.vertices.len();
                    if m == 1 {
                        let (x, y) = v.xy(&s.vertices[0]);
                        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{stroke}"/>"#);
                    }
                    for i in 0..m {
                        if m == 2 && i == 1 {
                            break;
                        }
                        line(&mut out, &v, &s.vertices[i], &s.vertices[(i + 1) % m], stroke, 1.5);
                    }
                }
            }
            Layer::Points { points, fill } => {
                for p in points.iter() {
                    let (x, y) = v.xy(p);
                    let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="1.5" fill="{fill}"/>"#);
                }
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Deformation overlay: grid light grey, input grey, output black.
pub fn deform_overlay(k: &CellComplex, input: &PLChain, output: &Chain) -> Result<String> {
    overlay(
        k,
        &[
            Layer::Complex { stroke: "#dddddd" },
            Layer::Chain { chain: output, stroke: "black", fill: "#00000033" },
            Layer::PL { chain: input, stroke: "#888888" },
        ],
    )
}

/// Horizontal bar chart; bars at or above `limit` are drawn red.
pub fn bar_chart(title: &str, bars: &[(String, f64)], limit: Option<f64>) -> String {
    let row = 18.0;
    let label_w = 160.0;
    let width = 560.0;
    let height = 40.0 + row * bars.len() as f64 + 10.0;
    let top = bars.iter().map(|b| b.1).chain(limit).fold(0.0f64, f64::max).max(1e-300);
    let span = width - label_w - 70.0;
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    out.push('\n');
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="8" y="18" font-size="13">{}</text>"#, escape(title));
    for (i, (label, value)) in bars.iter().enumerate() {
        let y = 30.0 + row * i as f64;
        let w = (value.max(0.0) / top * span).max(0.0);
        let color = match limit {
            Some(l) if *value >= l => "#c0392b",
            _ => "#4a6fa5",
        };
        let _ = writeln!(out, r#"<text x="8" y="{:.1}">{}</text>"#, y + 12.0, escape(label));
        let _ = writeln!(out, r#"<rect x="{label_w}" y="{y:.1}" width="{w:.2}" height="{:.1}" fill="{color}"/>"#, row - 4.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{value:.4}</text>"#, label_w + w + 4.0, y + 12.0);
    }
    if let Some(l) = limit {
        let x = label_w + l / top * span;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="26" x2="{x:.2}" y2="{:.1}" stroke="black" stroke-dasharray="4 2"/>"#,
            height - 6.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffGroup;
    use crate::complex::GridSpec;

    #[test]
    fn overlay_draws_every_edge() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 1)).unwrap();
        let s = overlay(&k, &[Layer::Complex { stroke: "grey" }]).unwrap();
        assert_eq!(s.matches("<line").count(), k.count(1));
        let c = Chain::from_terms(CoeffGroup::integers(), 2, [(0, 1)]).unwrap();
        let s = overlay(&k, &[Layer::Chain { chain: &c, stroke: "black", fill: "none" }]).unwrap();
        assert_eq!(s.matches("<polygon").count(), 1);
    }

    #[test]
    fn bars_mark_the_limit() {
        let s = bar_chart("t", &[("a".into(), 1.0), ("b".into(), 3.0)], Some(2.0));
        assert_eq!(s.matches("#c0392b").count(), 1);
        assert!(s.contains("stroke-dasharray"));
    }
}
