//! Exact stage: turn a float near-contact configuration into an exact one.
//!
//! With the minimum and maximum selectors of every adjacent pair frozen,
//! "signed height is zero" is a linear equation, and a triangulated piece
//! with `k` inner vertices has exactly `3k` such equations in `3k` unknowns.
//! Solving that system in rationals gives exact contacts; the result is
//! accepted only after an exact check of every pair.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{canvas_of, exactify, FloatRepresentation, Representation, SolverError};
use crate::geometry::{signed_height, HTriangle, NTriangle, Scalar};
use crate::planar::{Triangulation, Vertex};

const TOLERANCES: [f64; 3] = [1e-10, 1e-8, 1e-6];
const COMBOS_PER_TOLERANCE: usize = 24;

/// Term choices for one adjacent pair: the triangle attaining min s, max x
/// and max y, each with the alternatives that are within tolerance.
struct Choice {
    a: Vertex,
    b: Vertex,
    options: [Vec<Vertex>; 3],
}

/// Snaps the solver output onto an exact contact representation: every
/// adjacent pair touches, every other pair is disjoint, every inner
/// triangle lies in the gap between the outer ones.
pub fn snap_contacts(
    piece: &Triangulation,
    rep: &FloatRepresentation,
) -> Result<Representation, SolverError> {
    let start = exactify(rep)?;
    let outer = start
        .outer_triangles()
        .expect("solver output has outer triangles");
    let canvas = canvas_of(outer)?;
    let unit = canvas.h().to_f64();
    let inner: Vec<Vertex> = piece.inner_vertices().collect();
    let mut index = vec![usize::MAX; piece.n()];
    for (i, &v) in inner.iter().enumerate() {
        index[v] = i;
    }
    let z_f: Vec<Scalar> = inner
        .iter()
        .flat_map(|&v| {
            let t = start.get(v);
            [t.x().clone(), t.y().clone(), t.h().clone()]
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut tried: HashSet<Vec<Vertex>> = HashSet::new();
    for tol in TOLERANCES {
        let choices = selector_choices(piece, &start, tol * unit);
        for attempt in 0..COMBOS_PER_TOLERANCE {
            let picks: Vec<Vertex> = choices
                .iter()
                .flat_map(|c| {
                    c.options
                        .iter()
                        .map(|opts| {
                            if attempt == 0 {
                                opts[0]
                            } else {
                                opts[rng.gen_range(0..opts.len())]
                            }
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            if !tried.insert(picks.clone()) {
                continue;
            }
            let Some(z) = solve_system(&choices, &picks, &index, &start, &z_f) else {
                continue;
            };
            let mut cand = start.clone();
            let mut ok = true;
            for (i, &v) in inner.iter().enumerate() {
                match HTriangle::new(z[3 * i].clone(), z[3 * i + 1].clone(), z[3 * i + 2].clone()) {
                    Ok(t) => {
                        cand.triangles.insert(v, t);
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && is_exact_contact(piece, &cand, &canvas) {
                return Ok(cand);
            }
        }
    }
    Err(SolverError::SnapFailed)
}

fn selector_choices(piece: &Triangulation, rep: &Representation, tol: f64) -> Vec<Choice> {
    let mut out = Vec::new();
    for (a, b) in piece.edges() {
        if piece.is_outer(a) && piece.is_outer(b) {
            continue;
        }
        let (ta, tb) = (rep.get(a), rep.get(b));
        let pick = |va: &Scalar, vb: &Scalar, larger: bool| -> Vec<Vertex> {
            let first = if (va >= vb) == larger { a } else { b };
            let second = if first == a { b } else { a };
            if (va.to_f64() - vb.to_f64()).abs() <= tol {
                vec![first, second]
            } else {
                vec![first]
            }
        };
        // for min s the "first" choice is the smaller one
        let s_opts = {
            let (sa, sb) = (ta.s(), tb.s());
            let mut o = pick(&sa, &sb, false);
            if sa == sb {
                o = vec![a, b];
            }
            o
        };
        out.push(Choice {
            a,
            b,
            options: [
                s_opts,
                pick(ta.x(), tb.x(), true),
                pick(ta.y(), tb.y(), true),
            ],
        });
    }
    out
}

/// Builds and solves the frozen-selector system; when it is underdetermined
/// the float point is projected onto its solution set.
fn solve_system(
    choices: &[Choice],
    picks: &[Vertex],
    index: &[usize],
    rep: &Representation,
    z_f: &[Scalar],
) -> Option<Vec<Scalar>> {
    let n = z_f.len();
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(choices.len());
    for (c, pick) in choices.iter().zip(picks.chunks(3)) {
        debug_assert!(pick.iter().all(|&v| v == c.a || v == c.b));
        let mut row = vec![Scalar::zero(); n + 1];
        // s_p - x_q - y_r = 0, constants moved to the right-hand side
        let (sp, xq, yr) = (pick[0], pick[1], pick[2]);
        if index[sp] != usize::MAX {
            for d in 0..3 {
                row[3 * index[sp] + d] += &Scalar::one();
            }
        } else {
            row[n] -= &rep.get(sp).s();
        }
        if index[xq] != usize::MAX {
            row[3 * index[xq]] -= &Scalar::one();
        } else {
            row[n] += rep.get(xq).x();
        }
        if index[yr] != usize::MAX {
            row[3 * index[yr] + 1] -= &Scalar::one();
        } else {
            row[n] += rep.get(yr).y();
        }
        rows.push(row);
    }
    let pivots = rref(&mut rows, n)?;
    if pivots.len() == n {
        let mut z = vec![Scalar::zero(); n];
        for (r, &c) in pivots.iter().enumerate() {
            z[c] = rows[r][n].clone();
        }
        return Some(z);
    }
    // orthogonal projection of z_f onto {A z = b}
    let r = pivots.len();
    let mut gram: Vec<Vec<Scalar>> = Vec::with_capacity(r);
    for i in 0..r {
        let mut g = Vec::with_capacity(r + 1);
        for j in 0..r {
            g.push(dot(&rows[i][..n], &rows[j][..n]));
        }
        g.push(&rows[i][n] - dot(&rows[i][..n], z_f));
        gram.push(g);
    }
    let gp = rref(&mut gram, r)?;
    if gp.len() != r {
        return None;
    }
    let mut z = z_f.to_vec();
    for i in 0..r {
        let w = &gram[i][r];
        if w.is_zero() {
            continue;
        }
        for c in 0..n {
            if !rows[i][c].is_zero() {
                z[c] += &(w * &rows[i][c]);
            }
        }
    }
    Some(z)
}

fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter()
        .zip(b)
        .filter(|(x, _)| !x.is_zero())
        .map(|(x, y)| x * y)
        .sum()
}

/// Reduced row echelon form of the augmented matrix `[A | b]` with `n`
/// columns in `A`. Returns the pivot columns, or `None` if inconsistent.
fn rref(rows: &mut [Vec<Scalar>], n: usize) -> Option<Vec<usize>> {
    let m = rows.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Scalar::one() / &rows[r][c];
        for x in rows[r][c..=n].iter_mut().filter(|x| !x.is_zero()) {
            *x = &*x * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for j in c..=n {
                if !pivot_row[j].is_zero() {
                    row[j] = &row[j] - &(&f * &pivot_row[j]);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    Some(pivots)
}

/// Exact check: adjacent pairs touch, others are disjoint, inner triangles
/// lie in the canvas.
pub(crate) fn is_exact_contact(
    piece: &Triangulation,
    rep: &Representation,
    canvas: &NTriangle,
) -> bool {
    for v in piece.inner_vertices() {
        if !canvas.contains_triangle(rep.get(v)) {
            return false;
        }
    }
    for a in 0..piece.n() {
        for b in a + 1..piece.n() {
            if piece.is_outer(a) && piece.is_outer(b) {
                continue;
            }
            let sh = signed_height(rep.get(a), rep.get(b));
            let ok = if piece.has_edge(a, b) {
                sh.is_zero()
            } else {
                sh.is_negative()
            };
            if !ok {
                return false;
            }
        }
    }
    true
}
