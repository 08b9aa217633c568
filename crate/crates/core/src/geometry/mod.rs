//! Exact kernel for positive and negative homothets of the right triangle
//! with corners `(0,0)`, `(0,1)` and `(1,0)`.
//!
//! A positive homothet is stored by its right corner `(x, y)` and height `h`
//! and is the point set `{(a, b) : a >= x, b >= y, a + b <= x + y + h}`.
//! Two positive homothets always intersect in another positive homothet, a
//! single point, or nothing, so every predicate here reduces to comparing
//! three linear terms.

mod scalar;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use scalar::{q, ParseScalarError, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("triangle height must be positive, got {0}")]
    NonPositiveHeight(Scalar),
    #[error("push amount must be positive, got {0}")]
    NonPositiveStep(Scalar),
    #[error("empty triangle list")]
    EmptyList,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: Scalar,
    pub y: Scalar,
}

impl Point {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        Point { x, y }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.x.to_f64(), self.y.to_f64())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.x, self.y)
    }
}

/// Positive homothet: right corner `(x, y)`, height `h > 0`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTriangle", into = "RawTriangle")]
pub struct HTriangle {
    x: Scalar,
    y: Scalar,
    h: Scalar,
}

/// Negative homothet: top corner `(x, y)`, height `h > 0`; the point set
/// `{(a, b) : a <= x, b <= y, a + b >= x + y - h}`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTriangle", into = "RawTriangle")]
pub struct NTriangle {
    x: Scalar,
    y: Scalar,
    h: Scalar,
}

#[derive(Serialize, Deserialize)]
struct RawTriangle {
    x: Scalar,
    y: Scalar,
    h: Scalar,
}

impl TryFrom<RawTriangle> for HTriangle {
    type Error = GeometryError;
    fn try_from(r: RawTriangle) -> Result<Self, Self::Error> {
        HTriangle::new(r.x, r.y, r.h)
    }
}

impl From<HTriangle> for RawTriangle {
    fn from(t: HTriangle) -> Self {
        RawTriangle {
            x: t.x,
            y: t.y,
            h: t.h,
        }
    }
}

impl TryFrom<RawTriangle> for NTriangle {
    type Error = GeometryError;
    fn try_from(r: RawTriangle) -> Result<Self, Self::Error> {
        NTriangle::new(r.x, r.y, r.h)
    }
}

impl From<NTriangle> for RawTriangle {
    fn from(t: NTriangle) -> Self {
        RawTriangle {
            x: t.x,
            y: t.y,
            h: t.h,
        }
    }
}

/// Intersection of positive homothets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Overlap {
    Empty,
    SinglePoint(Point),
    Region(HTriangle),
}

impl Overlap {
    pub fn is_empty(&self) -> bool {
        matches!(self, Overlap::Empty)
    }

    /// The right corner of the overlap (the point itself for a single point).
    pub fn corner(&self) -> Option<Point> {
        match self {
            Overlap::Empty => None,
            Overlap::SinglePoint(p) => Some(p.clone()),
            Overlap::Region(t) => Some(t.right_corner()),
        }
    }

    pub fn height(&self) -> Option<Scalar> {
        match self {
            Overlap::Empty => None,
            Overlap::SinglePoint(_) => Some(Scalar::zero()),
            Overlap::Region(t) => Some(t.h.clone()),
        }
    }
}

impl HTriangle {
    pub fn new(x: Scalar, y: Scalar, h: Scalar) -> Result<Self, GeometryError> {
        if !h.is_positive() {
            return Err(GeometryError::NonPositiveHeight(h));
        }
        Ok(HTriangle { x, y, h })
    }

    /// Small-integer constructor for fixtures; panics on `h <= 0`.
    pub fn of(x: Scalar, y: Scalar, h: Scalar) -> Self {
        HTriangle::new(x, y, h).expect("positive height")
    }

    pub fn x(&self) -> &Scalar {
        &self.x
    }

    pub fn y(&self) -> &Scalar {
        &self.y
    }

    pub fn h(&self) -> &Scalar {
        &self.h
    }

    /// Level of the hypotenuse line `a + b = s`.
    pub fn s(&self) -> Scalar {
        &self.x + &self.y + &self.h
    }

    pub fn right_corner(&self) -> Point {
        Point::new(self.x.clone(), self.y.clone())
    }

    pub fn top_corner(&self) -> Point {
        Point::new(self.x.clone(), &self.y + &self.h)
    }

    pub fn east_corner(&self) -> Point {
        Point::new(&self.x + &self.h, self.y.clone())
    }

    /// Right, top and east corners.
    pub fn corners(&self) -> [Point; 3] {
        [self.right_corner(), self.top_corner(), self.east_corner()]
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        p.x >= self.x && p.y >= self.y && &p.x + &p.y <= self.s()
    }

    /// Strict interior membership.
    pub fn contains_point_strictly(&self, p: &Point) -> bool {
        p.x > self.x && p.y > self.y && &p.x + &p.y < self.s()
    }

    /// Point-set containment of `other` in `self`.
    pub fn contains(&self, other: &HTriangle) -> bool {
        other.x >= self.x && other.y >= self.y && other.s() <= self.s()
    }

    /// Moves only the vertical side left by `eps`; east corner and
    /// hypotenuse stay put.
    pub fn push_vertical(&self, eps: &Scalar) -> Result<HTriangle, GeometryError> {
        check_step(eps)?;
        HTriangle::new(&self.x - eps, self.y.clone(), &self.h + eps)
    }

    /// Moves only the horizontal side down by `eps`.
    pub fn push_horizontal(&self, eps: &Scalar) -> Result<HTriangle, GeometryError> {
        check_step(eps)?;
        HTriangle::new(self.x.clone(), &self.y - eps, &self.h + eps)
    }

    /// Moves only the hypotenuse outward by `eps`.
    pub fn push_hypotenuse(&self, eps: &Scalar) -> Result<HTriangle, GeometryError> {
        check_step(eps)?;
        HTriangle::new(self.x.clone(), self.y.clone(), &self.h + eps)
    }

    pub fn translate(&self, dx: &Scalar, dy: &Scalar) -> HTriangle {
        HTriangle {
            x: &self.x + dx,
            y: &self.y + dy,
            h: self.h.clone(),
        }
    }

    /// All three sides pushed outward by `iota`.
    pub fn inflate(&self, iota: &Scalar) -> Result<HTriangle, GeometryError> {
        check_step(iota)?;
        let three = Scalar::from_int(3);
        HTriangle::new(&self.x - iota, &self.y - iota, &self.h + &(three * iota))
    }

    /// Image under `p -> scale * p + offset` (`scale > 0`).
    pub fn transform(&self, map: &Homothety) -> HTriangle {
        HTriangle {
            x: &map.scale * &self.x + &map.dx,
            y: &map.scale * &self.y + &map.dy,
            h: &map.scale * &self.h,
        }
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.x.to_f64(), self.y.to_f64(), self.h.to_f64()]
    }
}

impl fmt::Debug for HTriangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H({:?}, {:?}, {:?})", self.x, self.y, self.h)
    }
}

fn check_step(eps: &Scalar) -> Result<(), GeometryError> {
    if eps.is_positive() {
        Ok(())
    } else {
        Err(GeometryError::NonPositiveStep(eps.clone()))
    }
}

impl NTriangle {
    pub fn new(x: Scalar, y: Scalar, h: Scalar) -> Result<Self, GeometryError> {
        if !h.is_positive() {
            return Err(GeometryError::NonPositiveHeight(h));
        }
        Ok(NTriangle { x, y, h })
    }

    pub fn of(x: Scalar, y: Scalar, h: Scalar) -> Self {
        NTriangle::new(x, y, h).expect("positive height")
    }

    pub fn x(&self) -> &Scalar {
        &self.x
    }

    pub fn y(&self) -> &Scalar {
        &self.y
    }

    pub fn h(&self) -> &Scalar {
        &self.h
    }

    /// Level of the hypotenuse line `a + b = x + y - h`.
    pub fn s(&self) -> Scalar {
        &self.x + &self.y - &self.h
    }

    pub fn top_corner(&self) -> Point {
        Point::new(self.x.clone(), self.y.clone())
    }

    /// Top corner, then the corners at the west and south ends of the hypotenuse.
    pub fn corners(&self) -> [Point; 3] {
        [
            self.top_corner(),
            Point::new(&self.x - &self.h, self.y.clone()),
            Point::new(self.x.clone(), &self.y - &self.h),
        ]
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        p.x <= self.x && p.y <= self.y && &p.x + &p.y >= self.s()
    }

    /// Containment of a positive homothet (three linear tests).
    pub fn contains_triangle(&self, t: &HTriangle) -> bool {
        &t.x + &t.h <= self.x && &t.y + &t.h <= self.y && &t.x + &t.y >= self.s()
    }

    /// The largest positive homothet inside, tangent to all three sides.
    pub fn medial(&self) -> HTriangle {
        let half = self.h.half();
        HTriangle {
            x: &self.x - &half,
            y: &self.y - &half,
            h: half,
        }
    }

    pub fn transform(&self, map: &Homothety) -> NTriangle {
        NTriangle {
            x: &map.scale * &self.x + &map.dx,
            y: &map.scale * &self.y + &map.dy,
            h: &map.scale * &self.h,
        }
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.x.to_f64(), self.y.to_f64(), self.h.to_f64()]
    }
}

impl fmt::Debug for NTriangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N({:?}, {:?}, {:?})", self.x, self.y, self.h)
    }
}

/// `p -> scale * p + (dx, dy)` with `scale > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homothety {
    pub scale: Scalar,
    pub dx: Scalar,
    pub dy: Scalar,
}

impl Homothety {
    pub fn identity() -> Self {
        Homothety {
            scale: Scalar::one(),
            dx: Scalar::zero(),
            dy: Scalar::zero(),
        }
    }

    pub fn scaling(scale: Scalar) -> Self {
        assert!(scale.is_positive());
        Homothety {
            scale,
            dx: Scalar::zero(),
            dy: Scalar::zero(),
        }
    }

    /// Maps the negative triangle `n` onto the unit one with top corner `(1, 1)`.
    pub fn normalizing(n: &NTriangle) -> Self {
        let scale = Scalar::one() / n.h();
        let dx = -(n.x() - n.h()) * &scale;
        let dy = -(n.y() - n.h()) * &scale;
        Homothety { scale, dx, dy }
    }

    pub fn inverse(&self) -> Self {
        let scale = Scalar::one() / &self.scale;
        Homothety {
            dx: -(&self.dx * &scale),
            dy: -(&self.dy * &scale),
            scale,
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::new(&self.scale * &p.x + &self.dx, &self.scale * &p.y + &self.dy)
    }
}

/// `min(s1, s2) - max(x1, x2) - max(y1, y2)`: positive iff the interiors
/// overlap, zero iff the triangles meet in exactly one point, negative iff
/// they are disjoint.
pub fn signed_height(t1: &HTriangle, t2: &HTriangle) -> Scalar {
    let s = t1.s().min(t2.s());
    let x = if t1.x >= t2.x { &t1.x } else { &t2.x };
    let y = if t1.y >= t2.y { &t1.y } else { &t2.y };
    s - x - y
}

pub fn intersect(t1: &HTriangle, t2: &HTriangle) -> Overlap {
    classify(
        t1.x.clone().max(t2.x.clone()),
        t1.y.clone().max(t2.y.clone()),
        t1.s().min(t2.s()),
    )
}

/// Common intersection of a non-empty list of positive homothets.
pub fn common_intersection<'a, I>(ts: I) -> Result<Overlap, GeometryError>
where
    I: IntoIterator<Item = &'a HTriangle>,
{
    let (x, y, s) = common_terms(ts).ok_or(GeometryError::EmptyList)?;
    Ok(classify(x, y, s))
}

/// Signed height of the common intersection (`None` for an empty list).
pub fn common_height<'a, I>(ts: I) -> Option<Scalar>
where
    I: IntoIterator<Item = &'a HTriangle>,
{
    common_terms(ts).map(|(x, y, s)| s - x - y)
}

fn common_terms<'a, I>(ts: I) -> Option<(Scalar, Scalar, Scalar)>
where
    I: IntoIterator<Item = &'a HTriangle>,
{
    let mut it = ts.into_iter();
    let first = it.next()?;
    let init = (first.x.clone(), first.y.clone(), first.s());
    Some(it.fold(init, |(x, y, s), t| {
        (x.max(t.x.clone()), y.max(t.y.clone()), s.min(t.s()))
    }))
}

fn classify(x: Scalar, y: Scalar, s: Scalar) -> Overlap {
    let h = &s - &x - &y;
    if h.is_negative() {
        Overlap::Empty
    } else if h.is_zero() {
        Overlap::SinglePoint(Point::new(x, y))
    } else {
        Overlap::Region(HTriangle { x, y, h })
    }
}

pub fn inside_ntriangle(t: &HTriangle, n: &NTriangle) -> bool {
    n.contains_triangle(t)
}

/// Whether the interiors of a positive and a negative homothet overlap.
pub fn interiors_overlap(t: &HTriangle, n: &NTriangle) -> bool {
    // open box in (a, b) intersected with an open slab in a + b
    let lo_a = &t.x;
    let hi_a = &n.x;
    let lo_b = &t.y;
    let hi_b = &n.y;
    let lo_s = n.s();
    let hi_s = t.s();
    lo_a < hi_a && lo_b < hi_b && lo_s < hi_s && lo_a + lo_b < hi_s && hi_a + hi_b > lo_s
}

/// Whether the closed sets meet.
pub fn meets_ntriangle(t: &HTriangle, n: &NTriangle) -> bool {
    let lo_s = n.s();
    let hi_s = t.s();
    t.x <= n.x && t.y <= n.y && lo_s <= hi_s && &t.x + &t.y <= hi_s && &n.x + &n.y >= lo_s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(x: i64, y: i64, h: i64) -> HTriangle {
        HTriangle::of(x.into(), y.into(), h.into())
    }

    fn p(x: Scalar, y: Scalar) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn rejects_degenerate_heights() {
        assert!(HTriangle::new(q(0, 1), q(0, 1), q(0, 1)).is_err());
        assert!(HTriangle::new(q(0, 1), q(0, 1), q(-1, 1)).is_err());
        assert!(NTriangle::new(q(0, 1), q(0, 1), q(0, 1)).is_err());
    }

    #[test]
    fn signed_height_examples() {
        assert_eq!(signed_height(&t(0, 0, 2), &t(1, 1, 2)), q(0, 1));
        assert_eq!(signed_height(&t(0, 0, 3), &t(1, 1, 3)), q(1, 1));
        assert_eq!(signed_height(&t(0, 0, 1), &t(5, 5, 1)), q(-9, 1));
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(
            intersect(&t(0, 0, 2), &t(1, 1, 2)),
            Overlap::SinglePoint(p(q(1, 1), q(1, 1)))
        );
        assert_eq!(
            intersect(&t(0, 0, 3), &t(1, 1, 3)),
            Overlap::Region(t(1, 1, 1))
        );
        let small = HTriangle::of(q(1, 2), q(1, 2), q(1, 1));
        assert_eq!(
            intersect(&t(0, 0, 4), &small),
            Overlap::Region(small.clone())
        );
        assert!(t(0, 0, 4).contains(&small));
        assert_eq!(intersect(&t(0, 0, 1), &t(5, 5, 1)), Overlap::Empty);
    }

    #[test]
    fn common_intersection_examples() {
        let ts = [t(0, 2, 2), t(2, 2, 2), t(2, 0, 2)];
        assert_eq!(
            common_intersection(&ts).unwrap(),
            Overlap::SinglePoint(p(q(2, 1), q(2, 1)))
        );
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(
                    intersect(&ts[i], &ts[j]),
                    Overlap::SinglePoint(p(q(2, 1), q(2, 1)))
                );
            }
        }
        assert_eq!(
            common_intersection(&[t(0, 0, 3)]).unwrap(),
            Overlap::Region(t(0, 0, 3))
        );
        assert_eq!(
            common_intersection(&[t(0, 0, 1), t(5, 5, 1), t(0, 5, 1)]).unwrap(),
            Overlap::Empty
        );
        assert_eq!(
            common_intersection(std::iter::empty()),
            Err(GeometryError::EmptyList)
        );
    }

    #[test]
    fn push_examples() {
        let u = t(0, 2, 2);
        let pushed = u.push_vertical(&q(1, 4)).unwrap();
        assert_eq!(pushed, HTriangle::of(q(-1, 4), q(2, 1), q(9, 4)));
        assert_eq!(pushed.east_corner(), u.east_corner());
        assert_eq!(pushed.s(), u.s());

        let v = t(1, 1, 1);
        let pushed = v.push_horizontal(&q(1, 2)).unwrap();
        assert_eq!(pushed, HTriangle::of(q(1, 1), q(1, 2), q(3, 2)));
        assert_eq!(pushed.x(), v.x());

        assert_eq!(
            u.translate(&q(0, 1), &q(-1, 4)),
            HTriangle::of(q(0, 1), q(7, 4), q(2, 1))
        );
        assert_eq!(
            u.push_hypotenuse(&q(1, 2)).unwrap(),
            HTriangle::of(q(0, 1), q(2, 1), q(5, 2))
        );
        assert!(u.push_vertical(&q(0, 1)).is_err());
        assert!(u.push_horizontal(&q(-1, 3)).is_err());
    }

    #[test]
    fn inflate_examples() {
        assert_eq!(t(0, 0, 1).inflate(&q(1, 1)).unwrap(), t(-1, -1, 4));

        let a = t(0, 0, 2);
        let b = HTriangle::of(q(101, 100), q(101, 100), q(2, 1));
        assert_eq!(signed_height(&a, &b), q(-2, 100));
        let iota = q(1, 100);
        let h = signed_height(&a.inflate(&iota).unwrap(), &b.inflate(&iota).unwrap());
        assert_eq!(h, q(1, 100));

        let iota = q(1, 3);
        let h = signed_height(
            &t(0, 0, 2).inflate(&iota).unwrap(),
            &t(1, 1, 2).inflate(&iota).unwrap(),
        );
        assert_eq!(h, q(1, 1));
    }

    #[test]
    fn ntriangle_containment_examples() {
        let n = NTriangle::of(q(3, 1), q(3, 1), q(2, 1));
        assert!(!inside_ntriangle(&t(1, 1, 1), &n));
        assert!(inside_ntriangle(&t(2, 2, 1), &n));
        assert!(!inside_ntriangle(&t(0, 0, 10), &n));
        assert_eq!(n.medial(), t(2, 2, 1));
    }

    #[test]
    fn gap_interiors() {
        // gap of the default outer triple
        let n = NTriangle::of(q(3, 1), q(3, 1), q(2, 1));
        for outer in [t(0, 0, 4), t(1, 3, 2), t(3, 1, 2)] {
            assert!(!interiors_overlap(&outer, &n));
            assert!(meets_ntriangle(&outer, &n));
        }
        assert!(interiors_overlap(&t(2, 2, 1), &n));
        assert!(!meets_ntriangle(&t(4, 4, 1), &n));
    }

    #[test]
    fn homothety_round_trip() {
        let n = NTriangle::of(q(3, 1), q(3, 1), q(2, 1));
        let map = Homothety::normalizing(&n);
        assert_eq!(n.transform(&map), NTriangle::of(q(1, 1), q(1, 1), q(1, 1)));
        let back = map.inverse();
        assert_eq!(n.transform(&map).transform(&back), n);
        let tri = t(2, 2, 1);
        assert_eq!(tri.transform(&map).transform(&back), tri);
    }
}
