//! Exact clearance of a one-parameter motion: how far the moved triangles
//! can travel before some forbidden event happens.
//!
//! Every moved triangle has `x`, `y` and `s = x + y + h` affine in the step
//! size, so signed heights, common heights and corner memberships are
//! piecewise linear in it. Each event is the first parameter value where
//! one of these functions reaches a threshold, found by walking the
//! breakpoints.

use std::collections::BTreeMap;

use crate::geometry::{signed_height, HTriangle, Point, Scalar};
use crate::planar::Vertex;
use crate::solver::Representation;

/// Elementary motions, each a unit-rate change of `(x, y, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    /// Vertical side moves left, east corner fixed.
    PushVertical,
    /// Horizontal side moves down, top corner fixed.
    PushHorizontal,
    /// Hypotenuse moves out, right corner fixed.
    PushHypotenuse,
    TranslateDown,
    Inflate,
}

impl Move {
    fn rates(self) -> [i64; 3] {
        match self {
            Move::PushVertical => [-1, 0, 0],
            Move::PushHorizontal => [0, -1, 0],
            Move::PushHypotenuse => [0, 0, 1],
            Move::TranslateDown => [0, -1, -1],
            Move::Inflate => [-1, -1, 1],
        }
    }

    /// The triangle after moving by `eps`.
    pub fn apply(self, t: &HTriangle, eps: &Scalar) -> HTriangle {
        let [a, b, c] = self.rates().map(Scalar::from_int);
        let x = t.x() + &a * eps;
        let y = t.y() + &b * eps;
        let s = t.s() + &c * eps;
        let h = &s - &x - &y;
        HTriangle::of(x, y, h)
    }
}

/// Which triangles move, and how.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MoveDescriptor {
    pub moves: BTreeMap<Vertex, Move>,
    /// A bad triple that this motion is meant to break; it is exempt from
    /// the triple events.
    pub breaking: Option<[Vertex; 3]>,
}

impl MoveDescriptor {
    pub fn single(v: Vertex, m: Move) -> Self {
        MoveDescriptor {
            moves: BTreeMap::from([(v, m)]),
            breaking: None,
        }
    }

    /// Applies the motion with step `eps`.
    pub fn apply(&self, rep: &Representation, eps: &Scalar) -> Representation {
        let mut out = rep.clone();
        for (&v, &m) in &self.moves {
            out.triangles.insert(v, m.apply(rep.get(v), eps));
        }
        out
    }
}

/// `c0 + c1 * e`.
#[derive(Debug, Clone)]
struct Affine {
    c0: Scalar,
    c1: Scalar,
}

impl Affine {
    fn at(&self, e: &Scalar) -> Scalar {
        &self.c0 + &self.c1 * e
    }
}

#[derive(Debug, Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

/// Sum of signed minima/maxima of affine functions, plus a constant.
#[derive(Debug, Clone)]
struct Pwl {
    terms: Vec<(Extremum, Vec<Affine>, bool)>,
    offset: Scalar,
}

impl Pwl {
    fn at(&self, e: &Scalar) -> Scalar {
        let mut total = self.offset.clone();
        for (ext, group, negate) in &self.terms {
            let vals = group.iter().map(|a| a.at(e));
            let v = match ext {
                Extremum::Min => vals.reduce(Scalar::min),
                Extremum::Max => vals.reduce(Scalar::max),
            }
            .expect("non-empty group");
            if *negate {
                total -= &v;
            } else {
                total += &v;
            }
        }
        total
    }

    /// Positive parameters where two functions of one group cross.
    fn breakpoints(&self) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero()];
        for (_, group, _) in &self.terms {
            for (i, a) in group.iter().enumerate() {
                for b in &group[i + 1..] {
                    let dc = &a.c1 - &b.c1;
                    if dc.is_zero() {
                        continue;
                    }
                    let e = (&b.c0 - &a.c0) / dc;
                    if e.is_positive() {
                        out.push(e);
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Smallest `e >= 0` with `f(e) >= 0` (`strict`: `f(e) > 0`, as an
    /// infimum), or `None` if there is none.
    fn first_hit(&self, strict: bool) -> Option<Scalar> {
        let bps = self.breakpoints();
        for (k, b) in bps.iter().enumerate() {
            let next = bps.get(k + 1);
            let probe = match next {
                Some(n) => (b + n).half(),
                None => b + Scalar::one(),
            };
            let fb = self.at(b);
            let slope = (self.at(&probe) - &fb) / (&probe - b);
            if fb.is_positive() || (!strict && fb.is_zero()) {
                return Some(b.clone());
            }
            if fb.is_zero() && slope.is_positive() {
                return Some(b.clone());
            }
            if slope.is_positive() {
                let root = b - &fb / &slope;
                if next.is_none_or(|n| root < *n || (!strict && root == *n)) {
                    return Some(root);
                }
            }
        }
        None
    }
}

fn track(t: &HTriangle, m: Option<Move>) -> [Affine; 3] {
    let rates = m.map_or([0, 0, 0], Move::rates);
    let base = [t.x().clone(), t.y().clone(), t.s()];
    let mut out = base.map(|c0| Affine {
        c0,
        c1: Scalar::zero(),
    });
    for (a, r) in out.iter_mut().zip(rates) {
        a.c1 = Scalar::from_int(r);
    }
    out
}

fn common(ts: &[&[Affine; 3]], offset: Scalar) -> Pwl {
    let col = |i: usize| ts.iter().map(|t| t[i].clone()).collect::<Vec<_>>();
    Pwl {
        terms: vec![
            (Extremum::Min, col(2), false),
            (Extremum::Max, col(0), true),
            (Extremum::Max, col(1), true),
        ],
        offset,
    }
}

/// Kind of forbidden event, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    NewPair(Vertex, Option<Vertex>),
    LostPair(Vertex, Vertex),
    NewTriple([Vertex; 3]),
    Budget(Vertex, Vertex),
    OuterCorner(Vertex, Vertex),
}

/// Smallest step at which a forbidden event happens, with the event;
/// `None` when nothing ever happens. Events: a non-intersecting pair
/// starts to intersect (obstacles included), an intersecting pair stops
/// intersecting, a triple of pairwise intersecting triangles gains a
/// common point, an inner-outer overlap reaches the budget
/// `rep.epsilon`, an outer corner enters a moved inner triangle.
pub fn clearance(
    rep: &Representation,
    obstacles: &[HTriangle],
    mv: &MoveDescriptor,
) -> Option<(Scalar, Event)> {
    let tracks: BTreeMap<Vertex, [Affine; 3]> = rep
        .triangles
        .iter()
        .map(|(&v, t)| (v, track(t, mv.moves.get(&v).copied())))
        .collect();
    let mut best: Option<(Scalar, Event)> = None;
    let mut offer = |e: Option<Scalar>, ev: Event| {
        if let Some(e) = e {
            if best.as_ref().is_none_or(|(b, _)| e < *b) {
                best = Some((e, ev));
            }
        }
    };

    for &m in mv.moves.keys() {
        let tm = &tracks[&m];
        for (&o, to) in &tracks {
            if o == m || (mv.moves.contains_key(&o) && o < m) {
                continue;
            }
            let sh = common(&[tm, to], Scalar::zero());
            let sh0 = signed_height(rep.get(m), rep.get(o));
            if sh0.is_negative() {
                offer(sh.first_hit(false), Event::NewPair(m, Some(o)));
            } else {
                let mut lost = sh.clone();
                negate(&mut lost);
                offer(lost.first_hit(true), Event::LostPair(m, o));
                let boundary = rep.is_outer(m) != rep.is_outer(o);
                if boundary {
                    let mut over = sh;
                    over.offset = -rep.epsilon.clone();
                    offer(over.first_hit(false), Event::Budget(m, o));
                }
            }
        }
        for ob in obstacles {
            let to = track(ob, None);
            offer(
                common(&[tm, &to], Scalar::zero()).first_hit(false),
                Event::NewPair(m, None),
            );
        }
    }

    // triples of pairwise intersecting triangles through a moved one
    for &m in mv.moves.keys() {
        let nb: Vec<Vertex> = rep
            .vertices()
            .filter(|&o| o != m && !signed_height(rep.get(m), rep.get(o)).is_negative())
            .collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if signed_height(rep.get(a), rep.get(b)).is_negative() {
                    continue;
                }
                let mut key = [m, a, b];
                key.sort_unstable();
                if mv.breaking == Some(key) {
                    continue;
                }
                let ts = [&tracks[&m], &tracks[&a], &tracks[&b]];
                let ch = common(&ts, Scalar::zero());
                if ch.at(&Scalar::zero()).is_negative() {
                    offer(ch.first_hit(false), Event::NewTriple(key));
                }
            }
        }
    }

    if let Some(outer) = rep.outer {
        for o in outer {
            for c in rep.get(o).corners() {
                for &m in mv.moves.keys() {
                    if rep.is_outer(m) {
                        continue;
                    }
                    offer(
                        corner_membership(&tracks[&m], &c).first_hit(false),
                        Event::OuterCorner(o, m),
                    );
                }
            }
        }
    }
    best
}

/// Non-negative exactly when `c` lies in the moving triangle.
fn corner_membership(t: &[Affine; 3], c: &Point) -> Pwl {
    let lin = |c0: Scalar, c1: Scalar| Affine { c0, c1 };
    let group = vec![
        lin(&c.x - &t[0].c0, -t[0].c1.clone()),
        lin(&c.y - &t[1].c0, -t[1].c1.clone()),
        lin(&t[2].c0 - &c.x - &c.y, t[2].c1.clone()),
    ];
    Pwl {
        terms: vec![(Extremum::Min, group, false)],
        offset: Scalar::zero(),
    }
}

fn negate(f: &mut Pwl) {
    for term in &mut f.terms {
        term.2 = !term.2;
    }
    f.offset = -f.offset.clone();
}

/// Smallest step at which the common intersection of `triple` becomes empty.
pub fn breaking_point(
    rep: &Representation,
    mv: &MoveDescriptor,
    triple: [Vertex; 3],
) -> Option<Scalar> {
    let tracks: Vec<[Affine; 3]> = triple
        .iter()
        .map(|&v| track(rep.get(v), mv.moves.get(&v).copied()))
        .collect();
    let mut f = common(&[&tracks[0], &tracks[1], &tracks[2]], Scalar::zero());
    negate(&mut f);
    f.first_hit(true)
}
