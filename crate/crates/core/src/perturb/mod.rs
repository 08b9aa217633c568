//! Removal of points shared by three triangles, and face gaps.

mod motion;

use std::collections::BTreeSet;

use crate::geometry::{
    common_intersection, intersect, signed_height, HTriangle, NTriangle, Overlap, Point, Scalar,
};
use crate::planar::Vertex;
use crate::solver::{gaps_between, Representation};

pub use motion::{breaking_point, clearance, Event, Move, MoveDescriptor};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    #[error("triangles {0:?} share a common point")]
    QuadruplePoint([Vertex; 4]),
    #[error("cannot assign roles in bad triple {0:?}")]
    Roles([Vertex; 3]),
    #[error("bad triple {0:?} involves an outer triangle")]
    OuterInTriple([Vertex; 3]),
    #[error("no bad triple to select")]
    NoTriples,
    #[error("zero clearance: {0}")]
    ZeroClearance(String),
    #[error("claim violated: {0}")]
    ClaimViolated(String),
    #[error("step {step} failed on triple {triple:?}: {reason}")]
    StepFailed {
        step: u8,
        triple: [Vertex; 3],
        reason: String,
    },
    #[error("still {0} bad triples after the round limit")]
    IterationCap(usize),
    #[error("no gap triangle for face {0:?}")]
    NoGap([Vertex; 3]),
    #[error("gap of face {0:?} has no free margin")]
    ZeroGapClearance([Vertex; 3]),
}

/// Three triangles with a common point. Roles follow the contact pattern
/// where `p` is the east corner of `u`, the right corner of `v` and the top
/// corner of `w`: `u` reaches furthest left, `w` furthest down and `v`
/// furthest up along the hypotenuse direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadTriple {
    pub u: Vertex,
    pub v: Vertex,
    pub w: Vertex,
    pub common: Overlap,
    /// Right corner of the common intersection.
    pub p: Point,
}

impl BadTriple {
    pub fn key(&self) -> [Vertex; 3] {
        let mut k = [self.u, self.v, self.w];
        k.sort_unstable();
        k
    }
}

/// Per-round step sizes and the clearance they were derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonBudget {
    pub epsilon: Scalar,
    pub eps1: Scalar,
    pub eps2: Option<Scalar>,
    pub eps3: Scalar,
    pub clearance: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalRound {
    pub triple: BadTriple,
    pub pushed: Vec<Vertex>,
    pub budget: EpsilonBudget,
}

fn intersection_lists(rep: &Representation) -> (Vec<Vertex>, Vec<Vec<usize>>) {
    let verts: Vec<Vertex> = rep.vertices().collect();
    let mut adj = vec![Vec::new(); verts.len()];
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            if !signed_height(rep.get(verts[i]), rep.get(verts[j])).is_negative() {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    (verts, adj)
}

/// All triples with a common point, with roles assigned.
pub fn find_bad_triples(rep: &Representation) -> Result<Vec<BadTriple>, PerturbError> {
    let (verts, adj) = intersection_lists(rep);
    let mut out = Vec::new();
    for i in 0..verts.len() {
        for &j in adj[i].iter().filter(|&&j| j > i) {
            for &k in adj[j].iter().filter(|&&k| k > j) {
                if !adj[i].contains(&k) {
                    continue;
                }
                let key = [verts[i], verts[j], verts[k]];
                let ts = key.map(|v| rep.get(v));
                let common = common_intersection(ts).expect("three triangles");
                if common.is_empty() {
                    continue;
                }
                for &l in adj[k].iter().filter(|&&l| l != i && l != j) {
                    if adj[i].contains(&l) && adj[j].contains(&l) {
                        let four = [verts[i], verts[j], verts[k], verts[l]];
                        if !common_intersection(four.iter().map(|&v| rep.get(v)))
                            .expect("four")
                            .is_empty()
                        {
                            let mut f = four;
                            f.sort_unstable();
                            return Err(PerturbError::QuadruplePoint(f));
                        }
                    }
                }
                out.push(assign_roles(rep, key, common)?);
            }
        }
    }
    Ok(out)
}

fn assign_roles(
    rep: &Representation,
    key: [Vertex; 3],
    common: Overlap,
) -> Result<BadTriple, PerturbError> {
    if key.iter().any(|&v| rep.is_outer(v)) {
        return Err(PerturbError::OuterInTriple(key));
    }
    let pick = |f: &dyn Fn(&HTriangle) -> Scalar, largest: bool| -> Option<Vertex> {
        let vals: Vec<(Scalar, Vertex)> = key.iter().map(|&v| (f(rep.get(v)), v)).collect();
        let best = if largest {
            vals.iter().max()
        } else {
            vals.iter().min()
        }?;
        // the extreme must be unique
        (vals.iter().filter(|(s, _)| *s == best.0).count() == 1).then_some(best.1)
    };
    let u = pick(&|t| t.x().clone(), false);
    let w = pick(&|t| t.y().clone(), false);
    let v = pick(&|t| t.s(), true);
    match (u, v, w) {
        (Some(u), Some(v), Some(w)) if u != v && v != w && u != w => {
            let p = common.corner().expect("non-empty overlap");
            Ok(BadTriple { u, v, w, common, p })
        }
        _ => Err(PerturbError::Roles(key)),
    }
}

/// Highest bad point, then leftmost, then smallest sorted triple.
pub fn select_bad(triples: &[BadTriple]) -> Result<&BadTriple, PerturbError> {
    triples
        .iter()
        .min_by(|a, b| {
            b.p.y
                .cmp(&a.p.y)
                .then_with(|| a.p.x.cmp(&b.p.x))
                .then_with(|| a.key().cmp(&b.key()))
        })
        .ok_or(PerturbError::NoTriples)
}

/// Half the clearance of the motion; motions without any event are capped
/// by the smallest moved height.
pub fn safe_epsilon(
    rep: &Representation,
    obstacles: &[HTriangle],
    mv: &MoveDescriptor,
) -> Result<Scalar, PerturbError> {
    let cap = || {
        mv.moves
            .keys()
            .map(|&v| rep.get(v).h().clone())
            .min()
            .unwrap_or_else(Scalar::one)
    };
    match clearance(rep, obstacles, mv) {
        Some((c, ev)) if !c.is_positive() => Err(PerturbError::ZeroClearance(format!("{ev:?}"))),
        Some((c, _)) => Ok(c.half()),
        None => Ok(cap().half()),
    }
}

/// Step 1: push the vertical side of `t(u)` left by `eps1`, keeping its
/// east corner; afterwards no triangle meets `t(u)` exactly in its top
/// corner.
pub fn step1(
    rep: &Representation,
    t: &BadTriple,
    eps1: &Scalar,
) -> Result<Representation, PerturbError> {
    let out = MoveDescriptor::single(t.u, Move::PushVertical).apply(rep, eps1);
    let q = out.get(t.u).top_corner();
    let touches =
        |z: Vertex| intersect(out.get(t.u), out.get(z)) == Overlap::SinglePoint(q.clone());
    if let Some(z) = out.vertices().find(|&z| z != t.u && touches(z)) {
        return Err(PerturbError::ClaimViolated(format!(
            "{z} touches the top corner of {}",
            t.u
        )));
    }
    Ok(out)
}

/// Triangles meeting `t(u)` in a single point of its hypotenuse other than
/// the east corner.
pub fn step2_targets(rep: &Representation, t: &BadTriple) -> Vec<Vertex> {
    let tu = rep.get(t.u);
    let east = tu.east_corner();
    let s = tu.s();
    rep.vertices()
        .filter(|&z| z != t.u)
        .filter(|&z| match intersect(tu, rep.get(z)) {
            Overlap::SinglePoint(pt) => &pt.x + &pt.y == s && pt != east,
            _ => false,
        })
        .collect()
}

/// Step 2: push the horizontal side of every target down by `eps2`;
/// afterwards no triangle touches `t(u)` in a single hypotenuse point
/// other than its east corner.
pub fn step2(
    rep: &Representation,
    t: &BadTriple,
    eps2: &Scalar,
) -> Result<Representation, PerturbError> {
    let targets = step2_targets(rep, t);
    let mv = MoveDescriptor {
        moves: targets.iter().map(|&z| (z, Move::PushHorizontal)).collect(),
        breaking: None,
    };
    let out = mv.apply(rep, eps2);
    if let Some(z) = step2_targets(&out, t).first() {
        return Err(PerturbError::ClaimViolated(format!(
            "{z} still touches the hypotenuse of {}",
            t.u
        )));
    }
    Ok(out)
}

fn step3_motion(t: &BadTriple) -> MoveDescriptor {
    let mut mv = MoveDescriptor::default();
    mv.moves.insert(t.u, Move::TranslateDown);
    mv.moves.insert(t.v, Move::PushVertical);
    mv.breaking = Some(t.key());
    mv
}

/// Step 3: translate `t(u)` down and push the vertical side of `t(v)` left,
/// both by `eps3`; the three triangles no longer share a point.
pub fn step3(
    rep: &Representation,
    t: &BadTriple,
    eps3: &Scalar,
) -> Result<Representation, PerturbError> {
    let out = step3_motion(t).apply(rep, eps3);
    let ts = [t.u, t.v, t.w].map(|v| out.get(v));
    if !common_intersection(ts).expect("three").is_empty() {
        return Err(PerturbError::StepFailed {
            step: 3,
            triple: t.key(),
            reason: "triple still shares a point".into(),
        });
    }
    Ok(out)
}

/// Exact comparison of a step's before and after states around the moved
/// triangles: same intersecting pairs (obstacles never met), no new triple,
/// boundary overlaps below the budget, outer corners outside inner triangles.
fn check_motion(
    before: &Representation,
    after: &Representation,
    moved: &BTreeSet<Vertex>,
    obstacles: &[HTriangle],
    breaking: Option<[Vertex; 3]>,
) -> Result<(), String> {
    let verts: Vec<Vertex> = before.vertices().collect();
    for &m in moved {
        for &o in &verts {
            if o == m {
                continue;
            }
            let b = !signed_height(before.get(m), before.get(o)).is_negative();
            let a = signed_height(after.get(m), after.get(o));
            if b != !a.is_negative() {
                return Err(format!("pair {m}-{o} changed"));
            }
            if before.is_outer(m) != before.is_outer(o) && a >= after.epsilon {
                return Err(format!("boundary overlap {m}-{o} reached the budget"));
            }
        }
        if obstacles
            .iter()
            .any(|ob| !signed_height(after.get(m), ob).is_negative())
        {
            return Err(format!("{m} meets an obstacle"));
        }
        for (i, &a) in verts.iter().enumerate() {
            for &b in &verts[i + 1..] {
                if a == m || b == m {
                    continue;
                }
                let mut key = [m, a, b];
                key.sort_unstable();
                if breaking == Some(key) {
                    continue;
                }
                let was = common_intersection(key.map(|v| before.get(v)))
                    .expect("three")
                    .is_empty();
                let now = common_intersection(key.map(|v| after.get(v)))
                    .expect("three")
                    .is_empty();
                if was && !now {
                    return Err(format!("new triple {key:?}"));
                }
            }
        }
        if let Some(outer) = after.outer {
            if !after.is_outer(m) {
                for o in outer {
                    if after
                        .get(o)
                        .corners()
                        .iter()
                        .any(|c| after.get(m).contains_point(c))
                    {
                        return Err(format!("corner of outer {o} inside {m}"));
                    }
                }
            }
        }
    }
    Ok(())
}

const RETRIES: usize = 20;

/// Runs Steps 1 to 3 on one bad triple with budgets from the exact
/// clearances; a step whose result fails the exact recheck is retried with
/// half the step size.
pub fn remove_one(
    rep: &Representation,
    t: &BadTriple,
    obstacles: &[HTriangle],
) -> Result<(Representation, RemovalRound), PerturbError> {
    let key = t.key();
    let fail = |step: u8, reason: String| PerturbError::StepFailed {
        step,
        triple: key,
        reason,
    };

    // Step 1
    let mv1 = MoveDescriptor::single(t.u, Move::PushVertical);
    let mut eps1 = safe_epsilon(rep, obstacles, &mv1)?;
    let mut min_clear = eps1.clone() + &eps1;
    let mut r1 = None;
    let mut last = String::new();
    for _ in 0..RETRIES {
        match step1(rep, t, &eps1)
            .map_err(|e| e.to_string())
            .and_then(|out| {
                check_motion(rep, &out, &BTreeSet::from([t.u]), obstacles, None).map(|_| out)
            }) {
            Ok(out) => {
                r1 = Some(out);
                break;
            }
            Err(e) => last = e,
        }
        eps1 = eps1.half();
    }
    let r1 = r1.ok_or_else(|| fail(1, last.clone()))?;

    // Step 2
    let targets = step2_targets(&r1, t);
    if let Some(z) = targets.iter().find(|&&z| r1.is_outer(z)) {
        return Err(fail(
            2,
            format!("outer triangle {z} touches the hypotenuse"),
        ));
    }
    let mut eps2 = None;
    let r2 = if targets.is_empty() {
        r1
    } else {
        let mv2 = MoveDescriptor {
            moves: targets.iter().map(|&z| (z, Move::PushHorizontal)).collect(),
            breaking: None,
        };
        let mut e2 = safe_epsilon(&r1, obstacles, &mv2)?;
        min_clear = min_clear.min(e2.clone() + &e2);
        let moved: BTreeSet<Vertex> = targets.iter().copied().collect();
        let mut r2 = None;
        for _ in 0..RETRIES {
            match step2(&r1, t, &e2)
                .map_err(|e| e.to_string())
                .and_then(|out| check_motion(&r1, &out, &moved, obstacles, None).map(|_| out))
            {
                Ok(out) => {
                    r2 = Some(out);
                    break;
                }
                Err(e) => last = e,
            }
            e2 = e2.half();
        }
        eps2 = Some(e2);
        r2.ok_or_else(|| fail(2, last.clone()))?
    };

    // Step 3: the step must exceed the point where the triple breaks
    let mv3 = step3_motion(t);
    let need = breaking_point(&r2, &mv3, key)
        .ok_or_else(|| fail(3, "motion never separates the triple".into()))?;
    let (limit, ev) = match clearance(&r2, obstacles, &mv3) {
        Some((c, ev)) => (c, format!("{ev:?}")),
        None => (&need + Scalar::one(), String::new()),
    };
    if limit <= need {
        return Err(PerturbError::ZeroClearance(format!(
            "step 3 on {key:?} blocked by {ev}"
        )));
    }
    min_clear = min_clear.min(limit.clone());
    let mut eps3 = (&need + &limit).half();
    let moved = BTreeSet::from([t.u, t.v]);
    let mut r3 = None;
    for _ in 0..RETRIES {
        match step3(&r2, t, &eps3)
            .map_err(|e| e.to_string())
            .and_then(|out| check_motion(&r2, &out, &moved, obstacles, Some(key)).map(|_| out))
        {
            Ok(out) => {
                r3 = Some(out);
                break;
            }
            Err(e) => last = e,
        }
        eps3 = (&need + &eps3).half();
    }
    let r3 = r3.ok_or_else(|| fail(3, last))?;
    let budget = EpsilonBudget {
        epsilon: rep.epsilon.clone(),
        eps1,
        eps2,
        eps3,
        clearance: min_clear,
    };
    Ok((
        r3,
        RemovalRound {
            triple: t.clone(),
            pushed: targets,
            budget,
        },
    ))
}

/// Removes bad triples one at a time, highest first, until none is left.
pub fn remove_all(
    rep: &Representation,
    obstacles: &[HTriangle],
) -> Result<(Representation, Vec<RemovalRound>), PerturbError> {
    let mut cur = rep.clone();
    let initial = find_bad_triples(&cur)?.len();
    let mut rounds = Vec::new();
    loop {
        let triples = find_bad_triples(&cur)?;
        if triples.is_empty() {
            return Ok((cur, rounds));
        }
        if rounds.len() >= initial {
            return Err(PerturbError::IterationCap(triples.len()));
        }
        let sel = select_bad(&triples)?.clone();
        let (next, round) = remove_one(&cur, &sel, obstacles)?;
        let left = find_bad_triples(&next)?.len();
        if left >= triples.len() {
            return Err(PerturbError::StepFailed {
                step: 3,
                triple: sel.key(),
                reason: "bad triple count did not drop".into(),
            });
        }
        rounds.push(round);
        cur = next;
    }
}

/// Gap of an inner face and the free margin beside it: returns the
/// negative triangle between `t(x)`, `t(y)`, `t(z)` whose interior misses
/// every triangle, and half the largest height such that probe triangles
/// standing on a gap side (inside the triangle carrying that side) miss
/// every triangle other than the face's three. `extra` lists further
/// triangles to keep clear of.
pub fn face_gap(
    rep: &Representation,
    face: [Vertex; 3],
    extra: &[HTriangle],
) -> Result<(NTriangle, Scalar), PerturbError> {
    let ts = face.map(|v| rep.get(v));
    let others: Vec<&HTriangle> = rep
        .triangles
        .iter()
        .filter(|(v, _)| !face.contains(v))
        .map(|(_, t)| t)
        .chain(extra.iter())
        .collect();
    let canvas = gaps_between(ts)
        .into_iter()
        .find(|c| {
            others
                .iter()
                .all(|t| !crate::geometry::interiors_overlap(t, &c.gap))
        })
        .ok_or(PerturbError::NoGap(face))?;
    let gap = canvas.gap;
    let (x, y, h) = (gap.x().clone(), gap.y().clone(), gap.h().clone());
    let low = &x + &y - &h;
    let meets = |a: Scalar, b: Scalar, s: Scalar| &a + &b <= s;
    let mut eta = h.clone();
    for t in others {
        // probes on the vertical side lie right of it
        if meets(
            x.clone().max(t.x().clone()),
            (&y - &h).max(t.y().clone()),
            (&x + &y).min(t.s()),
        ) {
            eta = eta.min((t.x() - &x).max(Scalar::zero()));
        }
        // on the horizontal side, above it
        if meets(
            (&x - &h).max(t.x().clone()),
            y.clone().max(t.y().clone()),
            (&x + &y).min(t.s()),
        ) {
            eta = eta.min((t.y() - &y).max(Scalar::zero()));
        }
        // on the hypotenuse, below-left of it
        if meets(
            (&x - &h).max(t.x().clone()),
            (&y - &h).max(t.y().clone()),
            low.clone().min(t.s()),
        ) {
            eta = eta.min((&low - t.s()).max(Scalar::zero()));
        }
    }
    if !eta.is_positive() {
        return Err(PerturbError::ZeroGapClearance(face));
    }
    Ok((gap, eta.half()))
}
