//! Polyline drawing of the graph inside its representation, and an exact
//! crossing check for any drawing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::Edge;
use crate::geometry::{intersect, HTriangle, Overlap, Point, Scalar};
use crate::planar::{Triangulation, Vertex};
use crate::solver::Representation;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DrawingError {
    #[error("vertex {0} has no triangle")]
    Missing(Vertex),
    #[error("triangle {0} has no point outside all other triangles")]
    NoFreePoint(Vertex),
    #[error("triangles {0} and {1} do not meet")]
    NotAdjacent(Vertex, Vertex),
    #[error("no route inside triangle {0} towards triangle {1}")]
    NoRoute(Vertex, Vertex),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawnEdge {
    pub u: Vertex,
    pub v: Vertex,
    /// From the point of `u` to the point of `v`.
    pub path: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Drawing {
    pub points: BTreeMap<Vertex, Point>,
    pub edges: Vec<DrawnEdge>,
}

/// A defect of a drawing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Crossing {
    Edges {
        first: Edge,
        second: Edge,
        at: Point,
    },
    SelfIntersection {
        edge: Edge,
        at: Point,
    },
    /// The vertex point lies in another triangle.
    CoveredPoint {
        vertex: Vertex,
    },
    /// Edge absent, duplicated, or not joining its endpoints' points.
    Detached {
        edge: Edge,
    },
}

fn cross(o: &Point, a: &Point, b: &Point) -> Scalar {
    (&a.x - &o.x) * (&b.y - &o.y) - (&a.y - &o.y) * (&b.x - &o.x)
}

fn sign(s: &Scalar) -> i8 {
    if s.is_positive() {
        1
    } else if s.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Hit {
    None,
    Point(Point),
    Overlap(Point, Point),
}

/// Exact intersection of two closed segments.
fn segment_hit(a: &Point, b: &Point, c: &Point, d: &Point) -> Hit {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if d1.is_zero() && d2.is_zero() && d3.is_zero() && d4.is_zero() {
        // collinear: lexicographic order runs along the line
        let lo = a.clone().min(b.clone()).max(c.clone().min(d.clone()));
        let hi = a.clone().max(b.clone()).min(c.clone().max(d.clone()));
        return match lo.cmp(&hi) {
            std::cmp::Ordering::Greater => Hit::None,
            std::cmp::Ordering::Equal => Hit::Point(lo),
            std::cmp::Ordering::Less => Hit::Overlap(lo, hi),
        };
    }
    if sign(&d1) * sign(&d2) > 0 || sign(&d3) * sign(&d4) > 0 {
        return Hit::None;
    }
    let t = &d1 / &(&d1 - &d2);
    Hit::Point(Point::new(
        &a.x + &(&t * &(&b.x - &a.x)),
        &a.y + &(&t * &(&b.y - &a.y)),
    ))
}

fn segment_meets_triangle(a: &Point, b: &Point, t: &HTriangle) -> bool {
    if t.contains_point(a) || t.contains_point(b) {
        return true;
    }
    let [p, q, r] = t.corners();
    [(&p, &q), (&q, &r), (&r, &p)]
        .iter()
        .any(|(c, d)| segment_hit(a, b, c, d) != Hit::None)
}

/// Either `y = c` or `x + y = s`.
#[derive(Debug, Clone)]
enum Line {
    Flat(Scalar),
    Slope(Scalar),
}

impl Line {
    fn at(&self, x: &Scalar) -> Scalar {
        match self {
            Line::Flat(c) => c.clone(),
            Line::Slope(s) => s - x,
        }
    }
}

/// Trapezoid of free space between `x = a` and `x = b`.
#[derive(Debug, Clone)]
struct Cell {
    slab: usize,
    a: Scalar,
    b: Scalar,
    lo: Line,
    hi: Line,
}

impl Cell {
    fn closure_contains(&self, p: &Point) -> bool {
        self.a <= p.x && p.x <= self.b && self.lo.at(&p.x) <= p.y && p.y <= self.hi.at(&p.x)
    }

    fn mid(&self) -> Scalar {
        (&self.a + &self.b).half()
    }

    fn center(&self) -> Point {
        let x = self.mid();
        let y = (self.lo.at(&x) + self.hi.at(&x)).half();
        Point::new(x, y)
    }

    /// Smaller of width and free height at the middle.
    fn size(&self) -> Scalar {
        let x = self.mid();
        (&self.b - &self.a).min(self.hi.at(&x) - self.lo.at(&x))
    }
}

/// Splits the interior of `tu` minus the closed `obstacles` (triangles
/// inside `tu`) into trapezoids whose bounding lines do not change across
/// their slab.
fn free_cells(tu: &HTriangle, obstacles: &[HTriangle]) -> Vec<Cell> {
    let (x0, x1) = (tu.x().clone(), tu.x() + tu.h());
    let flats: Vec<Scalar> = std::iter::once(tu.y().clone())
        .chain(obstacles.iter().map(|r| r.y().clone()))
        .collect();
    let slopes: Vec<Scalar> = std::iter::once(tu.s())
        .chain(obstacles.iter().map(|r| r.s()))
        .collect();
    let mut xs: BTreeSet<Scalar> = BTreeSet::from([x0.clone(), x1.clone()]);
    for r in obstacles {
        xs.insert(r.x().clone());
        xs.insert(r.x() + r.h());
    }
    for s in &slopes {
        for c in &flats {
            xs.insert(s - c);
        }
    }
    let xs: Vec<Scalar> = xs.into_iter().filter(|x| &x0 <= x && x <= &x1).collect();

    let mut cells = Vec::new();
    for (slab, w) in xs.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let m = (a + b).half();
        let top = Line::Slope(tu.s());
        let mut active: Vec<&HTriangle> = obstacles
            .iter()
            .filter(|r| r.x() <= a && b <= &(r.x() + r.h()))
            .collect();
        active.sort_by(|p, q| p.y().cmp(q.y()));
        let mut floor = Line::Flat(tu.y().clone());
        let mut push = |lo: Line, hi: Line| {
            if hi.at(&m) > lo.at(&m) {
                cells.push(Cell {
                    slab,
                    a: a.clone(),
                    b: b.clone(),
                    lo,
                    hi,
                });
            }
        };
        for r in active {
            let ceiling = if r.y() < &top.at(&m) {
                Line::Flat(r.y().clone())
            } else {
                top.clone()
            };
            push(floor.clone(), ceiling);
            let lid = Line::Slope(r.s());
            if lid.at(&m) > floor.at(&m) {
                floor = lid;
            }
        }
        push(floor, top);
    }
    cells
}

/// Route from `from` to `to` through the free cells; both points must lie
/// in the closure of the free space and be free themselves.
fn route(cells: &[Cell], from: &Point, to: &Point) -> Option<Vec<Point>> {
    let starts: Vec<usize> = (0..cells.len())
        .filter(|&i| cells[i].closure_contains(from))
        .collect();
    let goal = |i: usize| cells[i].closure_contains(to);
    let mut prev: Vec<Option<(usize, Point)>> = vec![None; cells.len()];
    let mut seen = vec![false; cells.len()];
    let mut queue = VecDeque::new();
    for &s in &starts {
        seen[s] = true;
        queue.push_back(s);
    }
    let mut found = None;
    while let Some(i) = queue.pop_front() {
        if goal(i) {
            found = Some(i);
            break;
        }
        for (j, cj) in cells.iter().enumerate() {
            if seen[j] || cj.slab.abs_diff(cells[i].slab) != 1 {
                continue;
            }
            let (l, r) = if cj.slab > cells[i].slab {
                (&cells[i], cj)
            } else {
                (cj, &cells[i])
            };
            let x = &l.b;
            let lo = l.lo.at(x).max(r.lo.at(x));
            let hi = l.hi.at(x).min(r.hi.at(x));
            if lo < hi {
                seen[j] = true;
                prev[j] = Some((i, Point::new(x.clone(), (lo + hi).half())));
                queue.push_back(j);
            }
        }
    }
    let mut i = found?;
    let mut rev = vec![to.clone(), cells[i].center()];
    while let Some((p, portal)) = prev[i].clone() {
        rev.push(portal);
        rev.push(cells[p].center());
        i = p;
    }
    rev.push(from.clone());
    rev.reverse();
    rev.dedup();
    Some(rev)
}

/// Regions shared by `t(u)` and triangles other than `t(u)` and `skip`.
fn overlaps(rep: &Representation, u: Vertex, skip: Option<Vertex>) -> Vec<HTriangle> {
    rep.triangles
        .iter()
        .filter(|(&w, _)| w != u && Some(w) != skip)
        .filter_map(|(_, t)| match intersect(rep.get(u), t) {
            Overlap::Region(r) => Some(r),
            _ => None,
        })
        .collect()
}

fn in_others(rep: &Representation, u: Vertex, p: &Point) -> bool {
    rep.triangles
        .iter()
        .any(|(&w, t)| w != u && t.contains_point(p))
}

/// Points of `t(u) ∩ t(v)` a route may aim at: the contact point, or the
/// corners, side midpoints and centroid of the common region.
fn targets(rep: &Representation, u: Vertex, v: Vertex) -> Result<Vec<Point>, DrawingError> {
    match intersect(rep.get(u), rep.get(v)) {
        Overlap::Empty => Err(DrawingError::NotAdjacent(u, v)),
        Overlap::SinglePoint(p) => Ok(vec![p]),
        Overlap::Region(r) => {
            let third = r.h() / &Scalar::from_int(3);
            let [a, b, c] = r.corners();
            let mid = |p: &Point, q: &Point| Point::new((&p.x + &q.x).half(), (&p.y + &q.y).half());
            Ok(vec![
                Point::new(r.x() + &third, r.y() + &third),
                mid(&a, &b),
                mid(&b, &c),
                mid(&c, &a),
                a,
                b,
                c,
            ])
        }
    }
}

/// Interior points of `t(u)` outside every other triangle: the centroid,
/// then the middles of the free trapezoids from the largest down, then a
/// grid.
fn candidate_points<'a>(rep: &'a Representation, u: Vertex) -> impl Iterator<Item = Point> + 'a {
    const GRID: i64 = 12;
    let tu = rep.get(u);
    let third = tu.h() / &Scalar::from_int(3);
    let centroid = std::iter::once(Point::new(tu.x() + &third, tu.y() + &third));
    let cells = std::iter::once(()).flat_map(move |_| {
        let mut cells = free_cells(tu, &overlaps(rep, u, None));
        cells.sort_by_key(|c| std::cmp::Reverse(c.size()));
        cells.into_iter().map(|c| c.center())
    });
    let grid = (1..GRID).flat_map(move |i| {
        (1..GRID - i).map(move |j| {
            let step = |k: i64| tu.h() * &Scalar::ratio(k, GRID);
            Point::new(tu.x() + &step(i), tu.y() + &step(j))
        })
    });
    centroid
        .chain(cells)
        .chain(grid)
        .filter(move |p| tu.contains_point_strictly(p) && !in_others(rep, u, p))
}

/// Centers of the free trapezoids and midpoints of the portals between
/// neighbouring ones: waypoints for routes that cannot go straight.
fn waypoints(tu: &HTriangle, obstacles: &[HTriangle]) -> Vec<Point> {
    let mut cells = free_cells(tu, obstacles);
    cells.sort_by(|p, q| q.size().cmp(&p.size()).then(p.slab.cmp(&q.slab)));
    let mut out: Vec<Point> = cells.iter().map(Cell::center).collect();
    for l in &cells {
        for r in cells.iter().filter(|r| r.slab == l.slab + 1) {
            let x = &l.b;
            let lo = l.lo.at(x).max(r.lo.at(x));
            let hi = l.hi.at(x).min(r.hi.at(x));
            if lo < hi {
                out.push(Point::new(x.clone(), (lo + hi).half()));
            }
        }
    }
    out
}

/// Two routes leaving the same point meet nowhere else.
fn apart(a: &[Point], b: &[Point]) -> bool {
    for i in 0..a.len() - 1 {
        for j in 0..b.len() - 1 {
            match segment_hit(&a[i], &a[i + 1], &b[j], &b[j + 1]) {
                Hit::None => {}
                Hit::Point(p) if i == 0 && j == 0 && p == a[0] => {}
                _ => return false,
            }
        }
    }
    true
}

/// Routes from one point of `t(u)` to every neighbour: straight where
/// possible, else bent once at a waypoint, never meeting each other. When
/// no point serves every neighbour the rest are routed through free cells.
fn star(
    rep: &Representation,
    u: Vertex,
    nbrs: &[Vertex],
) -> Result<(Point, BTreeMap<Vertex, Vec<Point>>), DrawingError> {
    let regions: Vec<(Vertex, HTriangle)> = rep
        .triangles
        .iter()
        .filter(|(&w, _)| w != u)
        .filter_map(|(&w, t)| match intersect(rep.get(u), t) {
            Overlap::Region(r) => Some((w, r)),
            _ => None,
        })
        .collect();
    let all: Vec<HTriangle> = regions.iter().map(|(_, r)| r.clone()).collect();
    let goals: Vec<(Vertex, Vec<Point>, Vec<HTriangle>)> = nbrs
        .iter()
        .map(|&v| {
            let others = regions
                .iter()
                .filter(|(w, _)| *w != v)
                .map(|(_, r)| r.clone())
                .collect();
            Ok((v, targets(rep, u, v)?, others))
        })
        .collect::<Result<_, DrawingError>>()?;
    let sees = |p: &Point, m: &Point, obstacles: &[HTriangle]| {
        obstacles.iter().all(|r| !segment_meets_triangle(p, m, r))
    };
    let mut bends: Option<Vec<Point>> = None;
    let mut best: Option<(usize, Point, BTreeMap<Vertex, Vec<Point>>)> = None;
    for p in candidate_points(rep, u) {
        let mut routes: BTreeMap<Vertex, Vec<Point>> = BTreeMap::new();
        for (v, ms, obstacles) in &goals {
            let path = ms
                .iter()
                .filter(|m| sees(&p, m, obstacles))
                .map(|m| vec![p.clone(), m.clone()])
                .find(|path| routes.values().all(|r| apart(r, path)));
            if let Some(path) = path {
                routes.insert(*v, path);
            }
        }
        if routes.len() < goals.len() {
            let ws = bends.get_or_insert_with(|| waypoints(rep.get(u), &all));
            for (v, ms, obstacles) in &goals {
                if routes.contains_key(v) {
                    continue;
                }
                let path = ws
                    .iter()
                    .filter(|w| sees(&p, w, &all))
                    .flat_map(|w| {
                        ms.iter()
                            .filter(|m| sees(w, m, obstacles))
                            .map(|m| vec![p.clone(), w.clone(), m.clone()])
                    })
                    .find(|path| routes.values().all(|r| apart(r, path)));
                if let Some(path) = path {
                    routes.insert(*v, path);
                }
            }
        }
        let count = routes.len();
        if count == goals.len() {
            return Ok((p, routes));
        }
        if best.as_ref().is_none_or(|b| count > b.0) {
            best = Some((count, p, routes));
        }
    }
    let (_, p, mut routes) = best.ok_or(DrawingError::NoFreePoint(u))?;
    for (v, ms, obstacles) in &goals {
        if !routes.contains_key(v) {
            let cells = free_cells(rep.get(u), obstacles);
            let path = route(&cells, &p, &ms[0]).ok_or(DrawingError::NoRoute(u, *v))?;
            routes.insert(*v, path);
        }
    }
    Ok((p, routes))
}

fn dist2(a: &Point, b: &Point) -> Scalar {
    let (dx, dy) = (&a.x - &b.x, &a.y - &b.y);
    &dx * &dx + &dy * &dy
}

/// Cuts self-intersections until the polyline is simple.
fn remove_loops(mut pts: Vec<Point>) -> Vec<Point> {
    'outer: loop {
        pts.dedup();
        let k = pts.len().saturating_sub(1);
        for i in 0..k {
            for j in i + 1..k {
                let hit = segment_hit(&pts[i], &pts[i + 1], &pts[j], &pts[j + 1]);
                if j == i + 1 {
                    if let Hit::Overlap(..) = hit {
                        // folds back on itself
                        pts.remove(i + 1);
                        continue 'outer;
                    }
                    continue;
                }
                let at = match hit {
                    Hit::None => continue,
                    Hit::Point(p) => p,
                    Hit::Overlap(a, b) => {
                        if dist2(&a, &pts[i]) <= dist2(&b, &pts[i]) {
                            a
                        } else {
                            b
                        }
                    }
                };
                let mut next: Vec<Point> = pts[..=i].to_vec();
                next.push(at);
                next.extend_from_slice(&pts[j + 1..]);
                pts = next;
                continue 'outer;
            }
        }
        return pts;
    }
}

/// One free point per triangle and one polyline per edge: from the point of
/// `u` into `t(u) ∩ t(v)`, across it, and on to the point of `v`.
pub fn extract_drawing(rep: &Representation, t: &Triangulation) -> Result<Drawing, DrawingError> {
    let mut points = BTreeMap::new();
    let mut halves = BTreeMap::new();
    for u in 0..t.n() {
        if !rep.triangles.contains_key(&u) {
            return Err(DrawingError::Missing(u));
        }
        let (p, routes) = star(rep, u, t.neighbors(u))?;
        points.insert(u, p);
        halves.insert(u, routes);
    }
    let mut edges = Vec::new();
    for (u, v) in t.edges() {
        let mut path = halves[&u][&v].clone();
        path.extend(halves[&v][&u].iter().rev().cloned());
        edges.push(DrawnEdge {
            u,
            v,
            path: remove_loops(path),
        });
    }
    Ok(Drawing { points, edges })
}

struct Seg<'a> {
    edge: usize,
    index: usize,
    a: &'a Point,
    b: &'a Point,
    xmin: &'a Scalar,
    xmax: &'a Scalar,
    ymin: &'a Scalar,
    ymax: &'a Scalar,
}

/// Exact audit of a drawing of `t` in `rep`: every vertex point is free,
/// every edge is drawn once between its endpoints' points, paths are simple,
/// and two paths share at most the point of a common endpoint.
pub fn check_drawing(d: &Drawing, rep: &Representation, t: &Triangulation) -> Vec<Crossing> {
    let mut defects = Vec::new();
    for (&v, p) in &d.points {
        if !rep.triangles.contains_key(&v) || !rep.get(v).contains_point(p) || in_others(rep, v, p)
        {
            defects.push(Crossing::CoveredPoint { vertex: v });
        }
    }
    let key = |e: &DrawnEdge| super::ordered(e.u, e.v);
    let drawn: BTreeMap<Edge, usize> = d
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (key(e), i))
        .collect();
    let want: BTreeSet<Edge> = t
        .edges()
        .into_iter()
        .map(|(a, b)| super::ordered(a, b))
        .collect();
    for e in want.symmetric_difference(&drawn.keys().copied().collect()) {
        defects.push(Crossing::Detached { edge: *e });
    }
    if drawn.len() != d.edges.len() {
        for (i, e) in d.edges.iter().enumerate() {
            if drawn[&key(e)] != i {
                defects.push(Crossing::Detached { edge: key(e) });
            }
        }
    }
    for e in &d.edges {
        let ends_ok = e.path.len() >= 2
            && d.points.get(&e.u) == e.path.first()
            && d.points.get(&e.v) == e.path.last()
            && e.path.windows(2).all(|w| w[0] != w[1]);
        if !ends_ok {
            defects.push(Crossing::Detached { edge: key(e) });
        }
    }

    let mut segs: Vec<Seg> = Vec::new();
    for (edge, e) in d.edges.iter().enumerate() {
        for (index, w) in e.path.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            let (xmin, xmax) = if a.x <= b.x {
                (&a.x, &b.x)
            } else {
                (&b.x, &a.x)
            };
            let (ymin, ymax) = if a.y <= b.y {
                (&a.y, &b.y)
            } else {
                (&b.y, &a.y)
            };
            segs.push(Seg {
                edge,
                index,
                a,
                b,
                xmin,
                xmax,
                ymin,
                ymax,
            });
        }
    }
    segs.sort_by(|p, q| p.xmin.cmp(q.xmin));
    for i in 0..segs.len() {
        let s = &segs[i];
        for o in &segs[i + 1..] {
            if o.xmin > s.xmax {
                break;
            }
            if o.ymin > s.ymax || s.ymin > o.ymax {
                continue;
            }
            let hit = segment_hit(s.a, s.b, o.a, o.b);
            if hit == Hit::None {
                continue;
            }
            let (e1, e2) = (&d.edges[s.edge], &d.edges[o.edge]);
            if s.edge == o.edge {
                let (lo, hi) = (s.index.min(o.index), s.index.max(o.index));
                let joint = &e1.path[hi];
                let fine = hi == lo + 1 && hit == Hit::Point(joint.clone());
                if !fine {
                    let at = match hit {
                        Hit::Point(p) | Hit::Overlap(p, _) => p,
                        Hit::None => unreachable!(),
                    };
                    defects.push(Crossing::SelfIntersection { edge: key(e1), at });
                }
                continue;
            }
            let shared: Vec<Vertex> = [e1.u, e1.v]
                .into_iter()
                .filter(|x| *x == e2.u || *x == e2.v)
                .collect();
            let fine = match &hit {
                Hit::Point(p) => shared.iter().any(|v| d.points.get(v) == Some(p)),
                _ => false,
            };
            if !fine {
                let at = match hit {
                    Hit::Point(p) | Hit::Overlap(p, _) => p,
                    Hit::None => unreachable!(),
                };
                let (a, b) = (key(e1), key(e2));
                defects.push(Crossing::Edges {
                    first: a.min(b),
                    second: a.max(b),
                    at,
                });
            }
        }
    }
    defects
}
