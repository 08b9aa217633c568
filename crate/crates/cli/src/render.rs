//! SVG output. The y axis is flipped so that triangles appear upright.

use std::fmt::Write;

use homothet::geometry::{intersect, HTriangle, Overlap, Point};
use homothet::solver::Representation;
use homothet::verify::Drawing;

pub struct Style {
    pub precision: usize,
    pub overlaps: bool,
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    pad: f64,
    precision: usize,
}

impl Frame {
    fn fmt(&self, v: f64) -> String {
        let s = format!("{:.*}", self.precision, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }

    fn point(&self, x: f64, y: f64) -> String {
        let px = (x - self.min_x) * self.scale + self.pad;
        let py = (self.max_y - y) * self.scale + self.pad;
        format!("{},{}", self.fmt(px), self.fmt(py))
    }

    fn polygon(&self, t: &HTriangle) -> String {
        let [x, y, h] = t.to_f64();
        [(x, y), (x + h, y), (x, y + h)]
            .iter()
            .map(|&(a, b)| self.point(a, b))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn at(&self, p: &Point) -> String {
        let (x, y) = p.to_f64();
        self.point(x, y)
    }
}

pub fn svg(rep: &Representation, drawing: Option<&Drawing>, style: &Style) -> String {
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for t in rep.triangles.values() {
        let [x, y, h] = t.to_f64();
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x + h);
        max_y = max_y.max(y + h);
    }
    if rep.triangles.is_empty() {
        (min_x, min_y, max_x, max_y) = (0.0, 0.0, 1.0, 1.0);
    }
    let extent = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
    let size = 800.0;
    let frame = Frame {
        min_x,
        max_y,
        scale: size / extent,
        pad: 10.0,
        precision: style.precision,
    };
    let width = (max_x - min_x) * frame.scale + 2.0 * frame.pad;
    let height = (max_y - min_y) * frame.scale + 2.0 * frame.pad;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = frame.fmt(width),
        h = frame.fmt(height)
    );
    let _ = writeln!(
        out,
        r#"<g id="triangles" stroke="black" stroke-width="0.5" fill-opacity="0.25">"#
    );
    for (&v, t) in &rep.triangles {
        let fill = if rep.is_outer(v) {
            "#cccccc"
        } else {
            PALETTE[v % PALETTE.len()]
        };
        let _ = writeln!(
            out,
            r#"<polygon data-vertex="{v}" points="{}" fill="{fill}"/>"#,
            frame.polygon(t)
        );
    }
    out.push_str("</g>\n");

    if style.overlaps {
        let _ = writeln!(out, r#"<g id="overlaps" fill="red" stroke="none">"#);
        let tris: Vec<_> = rep.triangles.iter().collect();
        for (i, (a, ta)) in tris.iter().enumerate() {
            for (b, tb) in &tris[i + 1..] {
                match intersect(ta, tb) {
                    Overlap::Empty => {}
                    Overlap::SinglePoint(p) => {
                        let xy = frame.at(&p);
                        let (cx, cy) = xy.split_once(',').unwrap_or(("0", "0"));
                        let _ = writeln!(
                            out,
                            r#"<circle data-pair="{a},{b}" cx="{cx}" cy="{cy}" r="2"/>"#
                        );
                    }
                    Overlap::Region(r) => {
                        let _ = writeln!(
                            out,
                            r#"<polygon data-pair="{a},{b}" points="{}" fill-opacity="0.6"/>"#,
                            frame.polygon(&r)
                        );
                    }
                }
            }
        }
        out.push_str("</g>\n");
    }

    if let Some(d) = drawing {
        let _ = writeln!(
            out,
            r##"<g id="drawing" stroke="#333" stroke-width="1" fill="none">"##
        );
        for e in &d.edges {
            let pts: Vec<String> = e.path.iter().map(|p| frame.at(p)).collect();
            let _ = writeln!(
                out,
                r#"<polyline data-edge="{},{}" points="{}"/>"#,
                e.u,
                e.v,
                pts.join(" ")
            );
        }
        for (&v, p) in &d.points {
            let xy = frame.at(p);
            let (cx, cy) = xy.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(
                out,
                r##"<circle data-vertex="{v}" cx="{cx}" cy="{cy}" r="3" fill="#333"/>"##
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
