//! Builds contact representations of single pieces: an exact constructor for
//! stacked pieces and a float least-squares solver, followed by exact snapping
//! onto rational contacts.

mod contacts;
mod snap;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    common_height, interiors_overlap, signed_height, GeometryError, HTriangle, Homothety,
    NTriangle, Scalar,
};
use crate::planar::{stacking_order, Triangulation, Vertex};

pub use contacts::{solve_contacts, FloatRepresentation, SolveStats};
pub use snap::snap_contacts;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("outer triangles violate the boundary hypothesis: {0}")]
    Hypothesis(String),
    #[error("no gap triangle fits between the outer triangles")]
    NoCanvas,
    #[error("piece is not stacked")]
    NotStacked,
    #[error("solver did not converge after {restarts} restarts: worst pair {worst_pair:?} off by {worst_residual:e}")]
    NonConvergence {
        restarts: usize,
        worst_pair: (Vertex, Vertex),
        worst_residual: f64,
    },
    #[error("non-finite coordinate for vertex {0}")]
    NonFinite(Vertex),
    #[error("no rational contact configuration near the float solution")]
    SnapFailed,
    #[error("no admissible inflation: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Tolerances and budgets for the float solver. Lengths are measured in
/// units of the canvas height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub delta: f64,
    pub margin: f64,
    pub h_min: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            delta: 1e-7,
            margin: 1e-3,
            h_min: 1e-6,
            max_iters: 400,
            restarts: 10,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.delta > 0.0
            && self.delta < self.margin / 6.0
            && self.h_min > 0.0
            && self.margin.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidParams(format!(
                "need 0 < delta < margin/6 and h_min > 0 (delta={}, margin={}, h_min={})",
                self.delta, self.margin, self.h_min
            )))
        }
    }
}

/// Triangles keyed by vertex, with the three outer vertices and the
/// boundary overlap budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representation {
    pub triangles: BTreeMap<Vertex, HTriangle>,
    pub outer: Option<[Vertex; 3]>,
    pub epsilon: Scalar,
}

impl Representation {
    pub fn new(outer: [Vertex; 3], outer_triangles: [HTriangle; 3], epsilon: Scalar) -> Self {
        let triangles = outer.into_iter().zip(outer_triangles).collect();
        Representation {
            triangles,
            outer: Some(outer),
            epsilon,
        }
    }

    /// Representation without designated outer triangles.
    pub fn free(triangles: impl IntoIterator<Item = (Vertex, HTriangle)>, epsilon: Scalar) -> Self {
        Representation {
            triangles: triangles.into_iter().collect(),
            outer: None,
            epsilon,
        }
    }

    pub fn get(&self, v: Vertex) -> &HTriangle {
        &self.triangles[&v]
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn is_outer(&self, v: Vertex) -> bool {
        self.outer.is_some_and(|o| o.contains(&v))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.triangles.keys().copied()
    }

    pub fn inner_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.vertices().filter(|v| !self.is_outer(*v))
    }

    pub fn outer_triangles(&self) -> Option<[&HTriangle; 3]> {
        self.outer.map(|o| o.map(|v| self.get(v)))
    }

    /// Image under a homothety; the budget scales along.
    pub fn transform(&self, map: &Homothety) -> Representation {
        Representation {
            triangles: self
                .triangles
                .iter()
                .map(|(&v, t)| (v, t.transform(map)))
                .collect(),
            outer: self.outer,
            epsilon: &self.epsilon * &map.scale,
        }
    }

    /// Renames vertices through `labels[v]`.
    pub fn relabel(&self, labels: &[Vertex]) -> Representation {
        Representation {
            triangles: self
                .triangles
                .iter()
                .map(|(&v, t)| (labels[v], t.clone()))
                .collect(),
            outer: self.outer.map(|o| o.map(|v| labels[v])),
            epsilon: self.epsilon.clone(),
        }
    }

    /// Largest denominator bit length over all coordinates.
    pub fn max_denom_bits(&self) -> u64 {
        self.triangles
            .values()
            .flat_map(|t| [t.x().denom_bits(), t.y().denom_bits(), t.h().denom_bits()])
            .max()
            .unwrap_or(0)
    }
}

/// Gap triangle together with the outer index playing each side role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canvas {
    pub gap: NTriangle,
    /// Index (into the given triple) of the triangle carrying the gap's hypotenuse.
    pub hypotenuse: usize,
    pub vertical: usize,
    pub horizontal: usize,
}

/// Checks that three triangles pairwise meet without a common point.
pub fn check_hypothesis(outer: [&HTriangle; 3]) -> Result<(), SolverError> {
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if signed_height(outer[i], outer[j]).is_negative() {
            return Err(SolverError::Hypothesis(format!(
                "triangles {i} and {j} are disjoint"
            )));
        }
    }
    if !common_height(outer).expect("three triangles").is_negative() {
        return Err(SolverError::Hypothesis(
            "the three triangles share a point".into(),
        ));
    }
    Ok(())
}

/// The negative triangle enclosed by the three outer triangles.
pub fn canvas_of(outer: [&HTriangle; 3]) -> Result<NTriangle, SolverError> {
    canvas_roles(outer).map(|c| c.gap)
}

/// Like [`canvas_of`], also reporting which triangle bounds which side.
pub fn canvas_roles(outer: [&HTriangle; 3]) -> Result<Canvas, SolverError> {
    check_hypothesis(outer)?;
    gap_between(outer).ok_or(SolverError::NoCanvas)
}

/// First entry of [`gaps_between`].
pub(crate) fn gap_between(t: [&HTriangle; 3]) -> Option<Canvas> {
    gaps_between(t).into_iter().next()
}

/// Tries every assignment of the hypotenuse, vertical and horizontal side
/// roles and keeps those whose negative triangle has positive height,
/// sides inside the corresponding sides, and interior free of all three.
pub fn gaps_between(t: [&HTriangle; 3]) -> Vec<Canvas> {
    const ROLES: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::new();
    for [u, v, w] in ROLES {
        let (tu, tv, tw) = (t[u], t[v], t[w]);
        let x = tv.x().clone();
        let y = tw.y().clone();
        let h = &x + &y - tu.s();
        if !h.is_positive() {
            continue;
        }
        let (xl, yl) = (&x - &h, &y - &h);
        let sides = tv.y() <= &yl
            && y <= tv.y() + tv.h()
            && tw.x() <= &xl
            && x <= tw.x() + tw.h()
            && tu.x() <= &xl
            && x <= tu.s() - tu.y();
        if !sides {
            continue;
        }
        let gap = NTriangle::of(x, y, h);
        if t.iter().any(|tri| interiors_overlap(tri, &gap)) {
            continue;
        }
        out.push(Canvas {
            gap,
            hypotenuse: u,
            vertical: v,
            horizontal: w,
        });
    }
    out
}

/// Exact contact representation of a stacked piece: every inserted vertex
/// gets the medial triangle of the gap between the three triangles of its
/// face. `outer` lists the triangles of `t.outer()` in order.
pub fn solve_stacked(
    t: &Triangulation,
    outer: [HTriangle; 3],
    epsilon: Scalar,
) -> Result<Representation, SolverError> {
    check_hypothesis([&outer[0], &outer[1], &outer[2]])?;
    let order = stacking_order(t).ok_or(SolverError::NotStacked)?;
    let mut rep = Representation::new(t.outer(), outer, epsilon);
    for (v, [a, b, c]) in order {
        let gap = gap_between([rep.get(a), rep.get(b), rep.get(c)]).ok_or(SolverError::NoCanvas)?;
        rep.triangles.insert(v, gap.gap.medial());
    }
    Ok(rep)
}

/// Converts the float solution to rationals without rounding.
pub fn exactify(rep: &FloatRepresentation) -> Result<Representation, SolverError> {
    let mut out = Representation::new(rep.outer, rep.outer_triangles.clone(), rep.epsilon.clone());
    for (&v, &[x, y, h]) in &rep.inner {
        let conv = |f: f64| Scalar::from_f64(f).ok_or(SolverError::NonFinite(v));
        let t = HTriangle::new(conv(x)?, conv(y)?, conv(h)?)?;
        out.triangles.insert(v, t.transform(&rep.frame));
    }
    Ok(out)
}

/// Inflates every inner triangle by one rational amount so that near
/// contacts become proper overlaps. Pairs with `|signed_height| <= delta`
/// count as adjacent, pairs at most `-margin` as non-adjacent; anything in
/// between is rejected. All lengths are in the representation's units.
pub fn robustify(
    rep: &Representation,
    delta: &Scalar,
    margin: &Scalar,
    epsilon: &Scalar,
) -> Result<Representation, SolverError> {
    let verts: Vec<Vertex> = rep.vertices().collect();
    let mut adjacent = Vec::new();
    for (i, &u) in verts.iter().enumerate() {
        for &v in &verts[i + 1..] {
            if rep.is_outer(u) && rep.is_outer(v) {
                continue;
            }
            let sh = signed_height(rep.get(u), rep.get(v));
            if sh.abs() <= *delta {
                adjacent.push((u, v));
            } else if sh > -margin.clone() {
                return Err(SolverError::Infeasible(format!(
                    "pair {u}-{v} has signed height {} between -margin and -delta",
                    sh.to_f64()
                )));
            }
        }
    }

    let lower = delta.clone();
    let upper = (margin.clone().min(epsilon.clone()) - delta) / Scalar::from_int(3);
    if lower >= upper {
        return Err(SolverError::Infeasible(format!(
            "need delta < (min(margin, epsilon) - delta)/3, got delta={} bound={}",
            lower.to_f64(),
            upper.to_f64()
        )));
    }
    let iota = log_midpoint(&lower, &upper);

    let mut out = rep.clone();
    for v in rep.inner_vertices() {
        out.triangles.insert(v, rep.get(v).inflate(&iota)?);
    }
    for &(u, v) in &adjacent {
        let sh = signed_height(out.get(u), out.get(v));
        if !sh.is_positive() {
            return Err(SolverError::Infeasible(format!(
                "pair {u}-{v} still only touches after inflation"
            )));
        }
        if (rep.is_outer(u) || rep.is_outer(v)) && sh >= *epsilon {
            return Err(SolverError::Infeasible(format!(
                "boundary overlap {u}-{v} reaches epsilon"
            )));
        }
    }
    for (i, &u) in verts.iter().enumerate() {
        for &v in &verts[i + 1..] {
            if adjacent.contains(&(u, v)) || (rep.is_outer(u) && rep.is_outer(v)) {
                continue;
            }
            if !signed_height(out.get(u), out.get(v)).is_negative() {
                return Err(SolverError::Infeasible(format!(
                    "non-adjacent pair {u}-{v} meets after inflation"
                )));
            }
        }
    }
    Ok(out)
}

/// A dyadic rational near the geometric mean of `lo < hi`, strictly between them.
fn log_midpoint(lo: &Scalar, hi: &Scalar) -> Scalar {
    let (l, h) = (lo.to_f64(), hi.to_f64());
    if l > 0.0 && h.is_finite() {
        let e = ((l.log2() + h.log2()) / 2.0).round() as i32;
        if let Some(c) = Scalar::from_f64(2f64.powi(e)) {
            if &c > lo && &c < hi {
                return c;
            }
        }
    }
    (lo + hi).half()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{intersect, q, Overlap, Point};
    use crate::planar::{gen_stacked, validate, GraphInput};

    fn t(x: i64, y: i64, h: i64) -> HTriangle {
        HTriangle::of(
            Scalar::from_int(x),
            Scalar::from_int(y),
            Scalar::from_int(h),
        )
    }

    fn default_outer() -> [HTriangle; 3] {
        [t(0, 0, 4), t(1, 3, 2), t(3, 1, 2)]
    }

    fn k4() -> Triangulation {
        validate(&GraphInput {
            n: 4,
            outer: [0, 1, 2],
            edges: vec![[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]],
        })
        .unwrap()
    }

    #[test]
    fn canvas_of_default_boundary() {
        let [a, b, c] = default_outer();
        let canvas = canvas_roles([&a, &b, &c]).unwrap();
        assert_eq!(canvas.gap, NTriangle::of(q(3, 1), q(3, 1), q(2, 1)));
        assert_eq!(
            (canvas.hypotenuse, canvas.vertical, canvas.horizontal),
            (0, 2, 1)
        );
        let scale = Homothety::scaling(q(2, 1));
        let scaled = [
            a.transform(&scale),
            b.transform(&scale),
            c.transform(&scale),
        ];
        assert_eq!(
            canvas_of([&scaled[0], &scaled[1], &scaled[2]]).unwrap(),
            NTriangle::of(q(6, 1), q(6, 1), q(4, 1))
        );
    }

    #[test]
    fn canvas_rejects_common_point() {
        let (a, b, c) = (t(0, 0, 2), t(1, 0, 2), t(0, 1, 2));
        assert!(matches!(
            canvas_of([&a, &b, &c]),
            Err(SolverError::Hypothesis(_))
        ));
        let (a, b, c) = (t(0, 0, 1), t(5, 5, 1), t(0, 1, 1));
        assert!(matches!(
            canvas_of([&a, &b, &c]),
            Err(SolverError::Hypothesis(_))
        ));
    }

    #[test]
    fn medial_child_and_tangency_points() {
        let gap = NTriangle::of(q(3, 1), q(3, 1), q(2, 1));
        let child = gap.medial();
        assert_eq!(child, t(2, 2, 1));
        // tangency equations x + h = X, y + h = Y, x + y = X + Y - H
        assert_eq!(child.east_corner(), Point::new(q(3, 1), q(2, 1)));
        assert_eq!(child.top_corner(), Point::new(q(2, 1), q(3, 1)));
        assert_eq!(child.right_corner(), Point::new(q(2, 1), q(2, 1)));
    }

    #[test]
    fn k4_stacked_solution() {
        let rep = solve_stacked(&k4(), default_outer(), Scalar::one()).unwrap();
        assert_eq!(rep.get(3), &t(2, 2, 1));
        for u in 0..4 {
            for v in u + 1..4 {
                assert!(signed_height(rep.get(u), rep.get(v)).is_zero());
            }
        }
        for tri in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            assert!(common_height(tri.iter().map(|&v| rep.get(v)))
                .unwrap()
                .is_negative());
        }
    }

    #[test]
    fn heights_halve_per_level() {
        let mut input = k4().to_input();
        input.n = 5;
        input.edges.extend([[0, 4], [1, 4], [3, 4]]);
        let tri = validate(&input).unwrap();
        let rep = solve_stacked(&tri, default_outer(), Scalar::one()).unwrap();
        let first_gap = canvas_of([rep.get(0), rep.get(1), rep.get(2)]).unwrap();
        assert_eq!(rep.get(4).h(), &(first_gap.h() / Scalar::from_int(4)));
    }

    #[test]
    fn stacked_is_homothety_equivariant() {
        let tri = gen_stacked(30, 5).unwrap();
        let map = Homothety {
            scale: q(3, 2),
            dx: q(-1, 3),
            dy: q(7, 1),
        };
        let rep = solve_stacked(&tri, default_outer(), Scalar::one()).unwrap();
        let scaled =
            solve_stacked(&tri, default_outer().map(|t| t.transform(&map)), q(3, 2)).unwrap();
        assert_eq!(rep.transform(&map), scaled);
    }

    #[test]
    fn stacked_solution_is_a_contact_representation() {
        for seed in 0..5 {
            let tri = gen_stacked(40, seed).unwrap();
            let rep = solve_stacked(&tri, default_outer(), Scalar::one()).unwrap();
            for u in 0..tri.n() {
                for v in u + 1..tri.n() {
                    let sh = signed_height(rep.get(u), rep.get(v));
                    assert_eq!(sh.is_zero(), tri.has_edge(u, v));
                    assert!(!sh.is_positive());
                }
            }
        }
    }

    #[test]
    fn solve_stacked_rejects_non_stacked() {
        let mut edges = Vec::new();
        for u in 0..6 {
            for v in u + 1..6 {
                if u + v != 5 {
                    edges.push([u, v]);
                }
            }
        }
        let oct = validate(&GraphInput {
            n: 6,
            outer: [0, 1, 2],
            edges,
        })
        .unwrap();
        assert_eq!(
            solve_stacked(&oct, default_outer(), Scalar::one()),
            Err(SolverError::NotStacked)
        );
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        let bad = SolverParams {
            delta: 1e-3,
            ..SolverParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn robustify_exact_contacts() {
        let rep = solve_stacked(&k4(), default_outer(), Scalar::one()).unwrap();
        let delta = Scalar::from_f64(1e-7).unwrap();
        let margin = Scalar::from_f64(1e-3).unwrap();
        let out = robustify(&rep, &delta, &margin, &q(1, 2)).unwrap();
        let iota = rep.get(3).x() - out.get(3).x();
        assert!(iota > delta && Scalar::from_int(3) * &iota + &delta < margin);
        // only one triangle of each pair is inflated
        for v in 0..3 {
            let h = intersect(out.get(3), out.get(v)).height().unwrap();
            assert!(h.is_positive() && h <= Scalar::from_int(3) * &iota);
        }
        assert_eq!(out.get(0), rep.get(0));
        assert!(matches!(
            intersect(out.get(1), out.get(2)),
            Overlap::SinglePoint(_)
        ));
    }

    #[test]
    fn robustify_rejects_incompatible_tolerances() {
        let rep = solve_stacked(&k4(), default_outer(), Scalar::one()).unwrap();
        let d = Scalar::from_f64(1e-3).unwrap();
        assert!(matches!(
            robustify(&rep, &d, &d, &Scalar::one()),
            Err(SolverError::Infeasible(_))
        ));
    }

    #[test]
    fn log_midpoint_is_inside() {
        let lo = Scalar::from_f64(1e-7).unwrap();
        let hi = Scalar::from_f64(3e-4).unwrap();
        let m = log_midpoint(&lo, &hi);
        assert!(m > lo && m < hi);
        let m = log_midpoint(&q(1, 3), &q(1, 2));
        assert!(m > q(1, 3) && m < q(1, 2));
    }
}
