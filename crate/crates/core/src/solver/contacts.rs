//! Float stage: least squares on signed heights with frozen selectors.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{canvas_roles, SolverError, SolverParams};
use crate::geometry::{HTriangle, Homothety, Scalar};
use crate::planar::{Triangulation, Vertex};

/// Float solution in canvas-normalized coordinates (canvas = top corner
/// `(1, 1)`, height 1) together with the exact map back.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatRepresentation {
    /// `[x, y, h]` per inner vertex, normalized.
    pub inner: BTreeMap<Vertex, [f64; 3]>,
    /// Normalized to input coordinates.
    pub frame: Homothety,
    pub outer: [Vertex; 3],
    pub outer_triangles: [HTriangle; 3],
    pub epsilon: Scalar,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveStats {
    pub restarts_used: usize,
    pub iterations: usize,
    pub max_edge_residual: f64,
    /// Largest signed height over non-adjacent pairs (should be `<= -margin`).
    pub max_non_edge: f64,
    pub max_containment_violation: f64,
    /// Objective after every accepted step of the successful attempt.
    pub objective_history: Vec<f64>,
}

/// Which triangle attains each of the three terms of a signed height.
#[derive(Clone, Copy)]
struct Pair {
    a: usize,
    b: usize,
    edge: bool,
}

/// Problem in normalized coordinates. Triangles are indexed with inner
/// vertices first (these carry variables), then the three outer ones.
struct Problem {
    k: usize,
    outer: [[f64; 3]; 3],
    pairs: Vec<Pair>,
    margin_target: f64,
    h_min: f64,
}

struct Eval {
    r: DVector<f64>,
    j: DMatrix<f64>,
}

impl Problem {
    fn tri(&self, z: &DVector<f64>, i: usize) -> [f64; 3] {
        if i < self.k {
            [z[3 * i], z[3 * i + 1], z[3 * i + 2]]
        } else {
            self.outer[i - self.k]
        }
    }

    fn rows(&self) -> usize {
        self.pairs.len() + 4 * self.k
    }

    fn signed_height(&self, z: &DVector<f64>, p: &Pair) -> (f64, [usize; 3]) {
        let (ta, tb) = (self.tri(z, p.a), self.tri(z, p.b));
        let (sa, sb) = (ta[0] + ta[1] + ta[2], tb[0] + tb[1] + tb[2]);
        let smin = if sa <= sb { p.a } else { p.b };
        let xmax = if ta[0] >= tb[0] { p.a } else { p.b };
        let ymax = if ta[1] >= tb[1] { p.a } else { p.b };
        (
            sa.min(sb) - ta[0].max(tb[0]) - ta[1].max(tb[1]),
            [smin, xmax, ymax],
        )
    }

    /// Residuals and Jacobian with every min, max and hinge replaced by its
    /// smooth version of width `tau` (`tau = 0` is the exact problem).
    fn eval(&self, z: &DVector<f64>, tau: f64, jacobian: bool) -> Eval {
        let m = self.rows();
        let n = 3 * self.k;
        let mut r = DVector::zeros(m);
        let mut j = if jacobian {
            DMatrix::zeros(m, n)
        } else {
            DMatrix::zeros(0, 0)
        };
        for (row, p) in self.pairs.iter().enumerate() {
            let (ta, tb) = (self.tri(z, p.a), self.tri(z, p.b));
            let (s, wsa, wsb) = smooth_min(ta[0] + ta[1] + ta[2], tb[0] + tb[1] + tb[2], tau);
            let (x, wxa, wxb) = smooth_max(ta[0], tb[0], tau);
            let (y, wya, wyb) = smooth_max(ta[1], tb[1], tau);
            let sh = s - x - y;
            let (val, slope) = if p.edge {
                (sh, 1.0)
            } else {
                hinge(sh + self.margin_target, tau)
            };
            r[row] = val;
            if jacobian && slope != 0.0 {
                for (t, ws, wx, wy) in [(p.a, wsa, wxa, wya), (p.b, wsb, wxb, wyb)] {
                    if t < self.k {
                        j[(row, 3 * t)] += slope * (ws - wx);
                        j[(row, 3 * t + 1)] += slope * (ws - wy);
                        j[(row, 3 * t + 2)] += slope * ws;
                    }
                }
            }
        }
        let base = self.pairs.len();
        for i in 0..self.k {
            let [x, y, h] = self.tri(z, i);
            let rows = [
                (x + h - 1.0, [1.0, 0.0, 1.0]),
                (y + h - 1.0, [0.0, 1.0, 1.0]),
                (1.0 - x - y, [-1.0, -1.0, 0.0]),
                (self.h_min - h, [0.0, 0.0, -1.0]),
            ];
            for (q, (v, grad)) in rows.into_iter().enumerate() {
                let row = base + 4 * i + q;
                let (val, slope) = hinge(v, tau);
                r[row] = val;
                if jacobian && slope != 0.0 {
                    for c in 0..3 {
                        j[(row, 3 * i + c)] = slope * grad[c];
                    }
                }
            }
        }
        Eval { r, j }
    }

    fn objective(&self, z: &DVector<f64>, tau: f64) -> f64 {
        0.5 * self.eval(z, tau, false).r.norm_squared()
    }

    fn stats(&self, z: &DVector<f64>) -> (SolveStats, (usize, usize, f64)) {
        let mut st = SolveStats {
            max_non_edge: f64::NEG_INFINITY,
            ..SolveStats::default()
        };
        let mut worst = (0, 0, 0.0);
        for p in &self.pairs {
            let (sh, _) = self.signed_height(z, p);
            if p.edge {
                if sh.abs() > st.max_edge_residual {
                    st.max_edge_residual = sh.abs();
                }
                if sh.abs() > worst.2 {
                    worst = (p.a, p.b, sh.abs());
                }
            } else {
                st.max_non_edge = st.max_non_edge.max(sh);
            }
        }
        for i in 0..self.k {
            let [x, y, h] = self.tri(z, i);
            let v = (x + h - 1.0).max(y + h - 1.0).max(1.0 - x - y).max(0.0);
            st.max_containment_violation = st.max_containment_violation.max(v);
        }
        (st, worst)
    }

    fn success(&self, st: &SolveStats, params: &SolverParams) -> bool {
        st.max_edge_residual <= params.delta
            && st.max_non_edge <= -params.margin
            && st.max_containment_violation <= params.delta
    }
}

/// `max(a, b)` and its partial derivatives, smoothed over width `tau`.
fn smooth_max(a: f64, b: f64, tau: f64) -> (f64, f64, f64) {
    if tau == 0.0 {
        return if a >= b { (a, 1.0, 0.0) } else { (b, 0.0, 1.0) };
    }
    let d = a - b;
    let root = (d * d + tau * tau).sqrt();
    (
        (a + b + root) / 2.0,
        (1.0 + d / root) / 2.0,
        (1.0 - d / root) / 2.0,
    )
}

fn smooth_min(a: f64, b: f64, tau: f64) -> (f64, f64, f64) {
    let (v, da, db) = smooth_max(-a, -b, tau);
    (-v, da, db)
}

/// `max(v, 0)` and its slope, smoothed over width `tau`.
fn hinge(v: f64, tau: f64) -> (f64, f64) {
    if tau == 0.0 {
        return if v > 0.0 { (v, 1.0) } else { (0.0, 0.0) };
    }
    let root = (v * v + tau * tau).sqrt();
    ((v + root) / 2.0, (1.0 + v / root) / 2.0)
}

/// Places the inner triangles of a 4-connected piece so that adjacent pairs
/// touch and non-adjacent pairs stay `margin` apart, all inside the gap
/// between the given outer triangles (listed in the order of `piece.outer()`).
pub fn solve_contacts(
    piece: &Triangulation,
    outer: [HTriangle; 3],
    epsilon: Scalar,
    params: &SolverParams,
) -> Result<FloatRepresentation, SolverError> {
    params.validate()?;
    let canvas = canvas_roles([&outer[0], &outer[1], &outer[2]])?;
    let to_unit = Homothety::normalizing(&canvas.gap);
    let frame = to_unit.inverse();
    let outer_ids = piece.outer();

    let inner: Vec<Vertex> = piece.inner_vertices().collect();
    let k = inner.len();
    // triangle index: inner vertices first, then outer ids in order
    let mut index = vec![usize::MAX; piece.n()];
    for (i, &v) in inner.iter().enumerate() {
        index[v] = i;
    }
    for (q, &v) in outer_ids.iter().enumerate() {
        index[v] = k + q;
    }
    let mut pairs = Vec::new();
    for a in 0..piece.n() {
        for b in a + 1..piece.n() {
            if piece.is_outer(a) && piece.is_outer(b) {
                continue;
            }
            pairs.push(Pair {
                a: index[a],
                b: index[b],
                edge: piece.has_edge(a, b),
            });
        }
    }
    let outer_unit = outer.clone().map(|t| t.transform(&to_unit).to_f64());
    let problem = Problem {
        k,
        outer: outer_unit,
        pairs,
        margin_target: 1.25 * params.margin,
        h_min: params.h_min,
    };

    // barycentric start with the outer vertices pinned to canvas side midpoints
    let mut anchor = [[0.0; 2]; 3];
    anchor[canvas.hypotenuse] = [0.5, 0.5];
    anchor[canvas.vertical] = [1.0, 0.5];
    anchor[canvas.horizontal] = [0.5, 1.0];
    let h0 = 1.0 / (2.0 * piece.n() as f64);

    let mut best: Option<(f64, (usize, usize, f64))> = None;
    for attempt in 0..=params.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(attempt as u64));
        // later attempts start from layouts with random positive edge weights
        let weight = |_: Vertex, _: Vertex, rng: &mut ChaCha8Rng| {
            if attempt == 0 {
                1.0
            } else {
                rng.gen_range(0.2..5.0)
            }
        };
        let start = tutte(piece, &inner, &index, &anchor, &mut rng, weight);
        let mut z = DVector::zeros(3 * k);
        for i in 0..k {
            let (px, py) = (start[i][0], start[i][1]);
            let h = if attempt == 0 {
                h0
            } else {
                h0 * rng.gen_range(0.5..1.5)
            };
            z[3 * i] = px - h / 3.0;
            z[3 * i + 1] = py - h / 3.0;
            z[3 * i + 2] = h;
        }
        let (z, iterations, history) = levenberg_marquardt(&problem, z, params);
        let (mut st, worst) = problem.stats(&z);
        if problem.success(&st, params) {
            st.restarts_used = attempt;
            st.iterations = iterations;
            st.objective_history = history;
            let inner_map = inner
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, [z[3 * i], z[3 * i + 1], z[3 * i + 2]]))
                .collect();
            return Ok(FloatRepresentation {
                inner: inner_map,
                frame,
                outer: outer_ids,
                outer_triangles: outer,
                epsilon,
                stats: st,
            });
        }
        let score = st
            .max_edge_residual
            .max(st.max_non_edge + params.margin)
            .max(st.max_containment_violation);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, worst));
        }
    }
    let (_, (a, b, res)) = best.expect("at least one attempt");
    let label = |i: usize| if i < k { inner[i] } else { outer_ids[i - k] };
    Err(SolverError::NonConvergence {
        restarts: params.restarts,
        worst_pair: (label(a), label(b)),
        worst_residual: res,
    })
}

fn tutte<F>(
    piece: &Triangulation,
    inner: &[Vertex],
    index: &[usize],
    anchor: &[[f64; 2]; 3],
    rng: &mut ChaCha8Rng,
    mut weight: F,
) -> Vec<[f64; 2]>
where
    F: FnMut(Vertex, Vertex, &mut ChaCha8Rng) -> f64,
{
    let k = inner.len();
    if k == 0 {
        return Vec::new();
    }
    let mut lap = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DMatrix::<f64>::zeros(k, 2);
    for (u, v) in piece.edges() {
        let w = weight(u, v, rng);
        let (i, j) = (index[u], index[v]);
        for (a, b) in [(i, j), (j, i)] {
            if a >= k {
                continue;
            }
            lap[(a, a)] += w;
            if b < k {
                lap[(a, b)] -= w;
            } else {
                rhs[(a, 0)] += w * anchor[b - k][0];
                rhs[(a, 1)] += w * anchor[b - k][1];
            }
        }
    }
    let sol = lap
        .lu()
        .solve(&rhs)
        .expect("Tutte system is nonsingular for connected pieces");
    (0..k).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect()
}

const SMOOTHING: [f64; 6] = [3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

/// Continuation over decreasing smoothing widths, finishing with damped
/// Gauss-Newton on the exact piecewise linear residual. Returns the final
/// point, the total iteration count and the objective after each accepted
/// step of the exact stage (non-increasing).
fn levenberg_marquardt(
    p: &Problem,
    mut z: DVector<f64>,
    params: &SolverParams,
) -> (DVector<f64>, usize, Vec<f64>) {
    let mut total = 0;
    for tau in SMOOTHING {
        let (next, it, _) = descend(p, z, tau, params.max_iters / 4, |_| false);
        z = next;
        total += it;
    }
    let (z, it, history) = descend(p, z, 0.0, params.max_iters, |z| {
        p.success(&p.stats(z).0, params)
    });
    (z, total + it, history)
}

fn descend<F>(
    p: &Problem,
    mut z: DVector<f64>,
    tau: f64,
    max_iters: usize,
    done: F,
) -> (DVector<f64>, usize, Vec<f64>)
where
    F: Fn(&DVector<f64>) -> bool,
{
    let mut lambda = 1e-3;
    let mut e = p.eval(&z, tau, true);
    let mut f = 0.5 * e.r.norm_squared();
    let mut history = vec![f];
    let mut it = 0;
    while it < max_iters {
        if done(&z) {
            break;
        }
        it += 1;
        let jt = e.j.transpose();
        let a = &jt * &e.j;
        let g = &jt * &e.r;
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = a.clone();
            for d in 0..damped.nrows() {
                damped[(d, d)] += lambda * (a[(d, d)] + 1e-9);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let cand = &z + step;
            let positive = (0..p.k).all(|i| cand[3 * i + 2] > 0.0);
            let fc = if positive {
                p.objective(&cand, tau)
            } else {
                f64::INFINITY
            };
            if fc < f {
                let stalled = tau > 0.0 && f - fc <= 1e-12 * f;
                z = cand;
                f = fc;
                history.push(f);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = !stalled;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
        e = p.eval(&z, tau, true);
    }
    (z, it, history)
}

impl FloatRepresentation {
    /// Inner triangles mapped back to input coordinates, in floats.
    pub fn absolute(&self) -> BTreeMap<Vertex, [f64; 3]> {
        let (s, dx, dy) = (
            self.frame.scale.to_f64(),
            self.frame.dx.to_f64(),
            self.frame.dy.to_f64(),
        );
        self.inner
            .iter()
            .map(|(&v, &[x, y, h])| (v, [s * x + dx, s * y + dy, s * h]))
            .collect()
    }
}
