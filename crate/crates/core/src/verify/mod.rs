//! Independent certification of a representation against a triangulation.
//!
//! Only the exact predicates of [`crate::geometry`] are used here.

mod drawing;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{
    common_intersection, interiors_overlap, meets_ntriangle, signed_height, HTriangle, NTriangle,
    Point, Scalar,
};
use crate::planar::{Triangulation, Vertex};
use crate::solver::Representation;

pub use drawing::{check_drawing, extract_drawing, Crossing, Drawing, DrawingError, DrawnEdge};

pub type Edge = (Vertex, Vertex);

fn ordered(a: Vertex, b: Vertex) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edge `uv` whenever `t(u)` and `t(v)` meet.
pub fn intersection_graph(rep: &Representation) -> BTreeSet<Edge> {
    let vs: Vec<Vertex> = rep.vertices().collect();
    let mut edges = BTreeSet::new();
    for (i, &a) in vs.iter().enumerate() {
        for &b in &vs[i + 1..] {
            if !signed_height(rep.get(a), rep.get(b)).is_negative() {
                edges.insert((a, b));
            }
        }
    }
    edges
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCheck {
    pub ok: bool,
    /// Edges of the triangulation whose triangles do not meet.
    pub missing: Vec<Edge>,
    /// Meeting pairs that are not edges.
    pub extra: Vec<Edge>,
    /// Vertices without a triangle, or triangles without a vertex.
    pub unmatched: Vec<Vertex>,
}

pub fn check_graph(rep: &Representation, t: &Triangulation) -> GraphCheck {
    let unmatched: Vec<Vertex> = rep
        .vertices()
        .filter(|&v| v >= t.n())
        .chain((0..t.n()).filter(|v| !rep.triangles.contains_key(v)))
        .collect();
    let have = intersection_graph(rep);
    let want: BTreeSet<Edge> = t.edges().into_iter().map(|(a, b)| ordered(a, b)).collect();
    let missing: Vec<Edge> = want.difference(&have).copied().collect();
    let extra: Vec<Edge> = have.difference(&want).copied().collect();
    GraphCheck {
        ok: missing.is_empty() && extra.is_empty() && unmatched.is_empty(),
        missing,
        extra,
        unmatched,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleCheck {
    pub ok: bool,
    pub bad_triples: Vec<[Vertex; 3]>,
}

/// Triples with a common point, scanning the triangles of the
/// intersection graph.
pub fn check_simple(rep: &Representation) -> SimpleCheck {
    let mut adj: BTreeMap<Vertex, BTreeSet<Vertex>> =
        rep.vertices().map(|v| (v, BTreeSet::new())).collect();
    for (a, b) in intersection_graph(rep) {
        adj.get_mut(&a).unwrap().insert(b);
        adj.get_mut(&b).unwrap().insert(a);
    }
    let mut bad = Vec::new();
    for (&a, na) in &adj {
        for &b in na.range(a + 1..) {
            for &c in adj[&b].range(b + 1..) {
                if na.contains(&c) && !common([a, b, c], rep) {
                    bad.push([a, b, c]);
                }
            }
        }
    }
    SimpleCheck {
        ok: bad.is_empty(),
        bad_triples: bad,
    }
}

/// Same result as [`check_simple`] by testing every triple.
pub fn check_simple_audit(rep: &Representation) -> SimpleCheck {
    let vs: Vec<Vertex> = rep.vertices().collect();
    let mut bad = Vec::new();
    for (i, &a) in vs.iter().enumerate() {
        for (j, &b) in vs.iter().enumerate().skip(i + 1) {
            for &c in &vs[j + 1..] {
                if !common([a, b, c], rep) {
                    bad.push([a, b, c]);
                }
            }
        }
    }
    SimpleCheck {
        ok: bad.is_empty(),
        bad_triples: bad,
    }
}

/// True when the three triangles have no common point.
fn common(key: [Vertex; 3], rep: &Representation) -> bool {
    common_intersection(key.map(|v| rep.get(v)))
        .expect("three triangles")
        .is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryViolation {
    pub inner: Vertex,
    pub outer: Vertex,
    pub height: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerViolation {
    pub outer: Vertex,
    pub corner: Point,
    pub inner: Vertex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub ok: bool,
    pub overlaps: Vec<BoundaryViolation>,
    pub corner_ok: bool,
    pub corners: Vec<CornerViolation>,
    pub missing_outer: bool,
}

/// Inner triangles meet outer ones in a point or in a triangle lower than
/// `epsilon`, and never cover an outer corner.
pub fn check_boundary(rep: &Representation, epsilon: &Scalar) -> BoundaryCheck {
    let Some(outer) = rep.outer else {
        return BoundaryCheck {
            ok: false,
            overlaps: vec![],
            corner_ok: false,
            corners: vec![],
            missing_outer: true,
        };
    };
    let mut overlaps = Vec::new();
    let mut corners = Vec::new();
    for i in rep.inner_vertices() {
        for o in outer {
            let sh = signed_height(rep.get(i), rep.get(o));
            if !sh.is_negative() && &sh >= epsilon {
                overlaps.push(BoundaryViolation {
                    inner: i,
                    outer: o,
                    height: sh,
                });
            }
            for c in rep.get(o).corners() {
                if rep.get(i).contains_point(&c) {
                    corners.push(CornerViolation {
                        outer: o,
                        corner: c,
                        inner: i,
                    });
                }
            }
        }
    }
    BoundaryCheck {
        ok: overlaps.is_empty(),
        corner_ok: corners.is_empty(),
        overlaps,
        corners,
        missing_outer: false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceCheck {
    pub ok: bool,
    pub failed: Vec<[Vertex; 3]>,
}

/// The gap of a face: a negative triangle with each side inside a side of
/// one face triangle, interior free of every triangle and closure free of
/// every other triangle.
pub fn gap_witness(rep: &Representation, face: [Vertex; 3]) -> Option<NTriangle> {
    const ROLES: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let ts = face.map(|v| rep.get(v));
    ROLES.iter().find_map(|&[a, b, c]| {
        let (hyp, ver, hor): (&HTriangle, &HTriangle, &HTriangle) = (ts[a], ts[b], ts[c]);
        let (x, y) = (ver.x().clone(), hor.y().clone());
        let h = &x + &y - hyp.s();
        if !h.is_positive() {
            return None;
        }
        let (xl, yl) = (&x - &h, &y - &h);
        let sides = ver.y() <= &yl
            && y <= (ver.y() + ver.h())
            && hor.x() <= &xl
            && x <= (hor.x() + hor.h())
            && hyp.x() <= &xl
            && hyp.y() <= &yl;
        if !sides {
            return None;
        }
        let gap = NTriangle::of(x, y, h);
        let free = rep.triangles.iter().all(|(v, t)| {
            if face.contains(v) {
                !interiors_overlap(t, &gap)
            } else {
                !meets_ntriangle(t, &gap)
            }
        });
        free.then_some(gap)
    })
}

pub fn check_face_condition(rep: &Representation, t: &Triangulation) -> FaceCheck {
    let failed: Vec<[Vertex; 3]> = t
        .inner_faces()
        .iter()
        .copied()
        .filter(|&f| {
            f.iter().any(|v| !rep.triangles.contains_key(v)) || gap_witness(rep, f).is_none()
        })
        .collect();
    FaceCheck {
        ok: failed.is_empty(),
        failed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Scan every triple for common points and compare with the graph scan.
    pub audit: bool,
    pub faces: bool,
    pub drawing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawingCheck {
    pub planar: bool,
    pub crossings: Vec<Crossing>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub graph: GraphCheck,
    pub simple: SimpleCheck,
    /// Present in audit mode: whether the full triple scan agrees.
    pub audit_agrees: Option<bool>,
    pub boundary: BoundaryCheck,
    pub faces: Option<FaceCheck>,
    pub drawing: Option<DrawingCheck>,
}

impl VerificationReport {
    /// Names of the failed checks.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.graph.ok {
            out.push("graph");
        }
        if !self.simple.ok {
            out.push("simple");
        }
        if self.audit_agrees == Some(false) {
            out.push("audit");
        }
        if !self.boundary.ok || self.boundary.missing_outer {
            out.push("boundary");
        }
        if !self.boundary.corner_ok {
            out.push("corners");
        }
        if self.faces.as_ref().is_some_and(|f| !f.ok) {
            out.push("faces");
        }
        if self.drawing.as_ref().is_some_and(|d| !d.planar) {
            out.push("drawing");
        }
        out
    }
}

pub fn full_report(
    rep: &Representation,
    t: &Triangulation,
    epsilon: &Scalar,
    opts: ReportOptions,
) -> VerificationReport {
    let graph = check_graph(rep, t);
    let simple = check_simple(rep);
    let audit_agrees = opts.audit.then(|| check_simple_audit(rep) == simple);
    let boundary = check_boundary(rep, epsilon);
    let faces = (opts.faces && graph.unmatched.is_empty()).then(|| check_face_condition(rep, t));
    let drawing = (opts.drawing && graph.ok && simple.ok).then(|| match extract_drawing(rep, t) {
        Ok(d) => {
            let crossings = check_drawing(&d, rep, t);
            DrawingCheck {
                planar: crossings.is_empty(),
                crossings,
                error: None,
            }
        }
        Err(e) => DrawingCheck {
            planar: false,
            crossings: vec![],
            error: Some(e.to_string()),
        },
    });
    let mut report = VerificationReport {
        passed: false,
        graph,
        simple,
        audit_agrees,
        boundary,
        faces,
        drawing,
    };
    report.passed = report.failures().is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::q;
    use crate::planar::{validate, GraphInput};

    fn t(x: i64, y: i64, h: i64) -> HTriangle {
        HTriangle::of(
            Scalar::from_int(x),
            Scalar::from_int(y),
            Scalar::from_int(h),
        )
    }

    pub(super) fn k4() -> (Triangulation, Representation) {
        let g = validate(&GraphInput {
            n: 4,
            outer: [0, 1, 2],
            edges: vec![[0, 1], [0, 2], [1, 2], [0, 3], [1, 3], [2, 3]],
        })
        .unwrap();
        let mut rep = Representation::new(
            [0, 1, 2],
            [t(0, 0, 4), t(1, 3, 2), t(3, 1, 2)],
            Scalar::one(),
        );
        rep.triangles.insert(3, t(2, 2, 1));
        (g, rep)
    }

    fn all() -> ReportOptions {
        ReportOptions {
            audit: true,
            faces: true,
            drawing: true,
        }
    }

    #[test]
    fn k4_passes_everything() {
        let (g, rep) = k4();
        assert_eq!(intersection_graph(&rep).len(), 6);
        let r = full_report(&rep, &g, &Scalar::one(), all());
        assert!(r.passed, "{r:?}");
        assert_eq!(r.audit_agrees, Some(true));
        assert_eq!(r.drawing.unwrap().crossings.len(), 0);
    }

    #[test]
    fn disjoint_triangles_have_no_edges() {
        let rep = Representation::free(
            [(0, t(0, 0, 1)), (1, t(5, 0, 1)), (2, t(0, 5, 1))],
            Scalar::one(),
        );
        assert!(intersection_graph(&rep).is_empty());
    }

    #[test]
    fn triple_point_fixture() {
        let rep = Representation::free(
            [(0, t(0, 2, 2)), (1, t(2, 2, 2)), (2, t(2, 0, 2))],
            Scalar::one(),
        );
        assert_eq!(check_simple(&rep).bad_triples, vec![[0, 1, 2]]);
        assert_eq!(check_simple_audit(&rep), check_simple(&rep));
        let fixed = Representation::free(
            [
                (0, HTriangle::of(q(-1, 4), q(7, 4), q(9, 4))),
                (1, HTriangle::of(q(7, 4), q(2, 1), q(9, 4))),
                (2, t(2, 0, 2)),
            ],
            Scalar::one(),
        );
        assert!(check_simple(&fixed).ok);
    }

    #[test]
    fn corner_violation_is_named() {
        let (_, mut rep) = k4();
        rep.triangles
            .insert(3, HTriangle::of(q(5, 2), q(5, 2), q(1, 1)));
        let b = check_boundary(&rep, &Scalar::one());
        assert!(!b.corner_ok);
        assert_eq!(b.corners[0].corner, Point::new(q(3, 1), q(3, 1)));
    }

    #[test]
    fn deep_boundary_overlap_fails() {
        let (_, mut rep) = k4();
        rep.triangles
            .insert(3, HTriangle::of(q(2, 1), q(2, 1), q(1, 1)));
        assert!(check_boundary(&rep, &Scalar::one()).ok);
        rep.triangles
            .insert(3, HTriangle::of(q(1, 1), q(2, 1), q(3, 2)));
        let b = check_boundary(&rep, &q(1, 4));
        assert!(!b.ok);
        assert_eq!(b.overlaps[0].inner, 3);
    }

    #[test]
    fn shrunk_triangle_loses_exactly_its_edge() {
        let (g, mut rep) = k4();
        // keeps its contacts with 0 and 3 but no longer reaches 2
        rep.triangles
            .insert(1, HTriangle::of(q(1, 1), q(3, 1), q(3, 2)));
        let r = full_report(&rep, &g, &Scalar::one(), ReportOptions::default());
        assert!(!r.passed);
        assert_eq!(r.graph.missing, vec![(1, 2)]);
        assert!(r.graph.extra.is_empty());
        assert_eq!(r.failures(), vec!["graph"]);
    }

    #[test]
    fn face_gaps_of_k4() {
        let (g, rep) = k4();
        assert!(check_face_condition(&rep, &g).ok);
        let mut blocked = rep.clone();
        // a triangle pressed into the gap between 0, 1 and 3
        blocked
            .triangles
            .insert(9, HTriangle::of(q(3, 2), q(5, 2), q(1, 4)));
        let gap = gap_witness(&rep, [0, 1, 3]).unwrap();
        assert!(meets_ntriangle(blocked.get(9), &gap));
        assert!(gap_witness(&blocked, [0, 1, 3]).is_none());
    }
}
