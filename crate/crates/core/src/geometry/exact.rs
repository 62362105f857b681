//! Exact geometric predicates.
//!
//! Input vertices are plain `f64` pairs and go through `robust::orient2d`.
//! Points constructed by the kernel (segment crossings, midpoints) are kept as
//! exact fractions of dyadic big integers next to an `f64` approximation good
//! to a couple of ulps; predicates on them try a floating-point filter first
//! and fall back to exact integer arithmetic when the filter cannot certify
//! the sign.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;

use num_bigint::{BigInt, Sign};
use num_traits::{Float, ToPrimitive, Zero};

use super::Coord;

/// Bound on the floating evaluation error of an orientation determinant
/// relative to the squared coordinate magnitude (a few ulps, padded).
const ORIENT_FILTER: f64 = 1e-13;
/// Relative bound on the error of a constructed point's approximation.
const COORD_FILTER: f64 = 1e-15;

#[inline]
fn rc(c: Coord) -> robust::Coord<f64> {
    robust::Coord { x: c.x, y: c.y }
}

/// Sign of the turn `a -> b -> c`: `Greater` when `c` lies left of `a -> b`.
#[inline]
pub(crate) fn orient(a: Coord, b: Coord, c: Coord) -> Ordering {
    let d = robust::orient2d(rc(a), rc(b), rc(c));
    d.partial_cmp(&0.0).expect("finite coordinates")
}

/// Exact dyadic number `m · 2^e`.
#[derive(Clone, Debug)]
struct Dy {
    m: BigInt,
    e: i32,
}

impl Dy {
    fn one() -> Dy {
        Dy {
            m: BigInt::from(1),
            e: 0,
        }
    }

    fn of(v: f64) -> Dy {
        if v == 0.0 {
            return Dy {
                m: BigInt::zero(),
                e: 0,
            };
        }
        let (mantissa, exp, sign) = v.integer_decode();
        let m = BigInt::from(mantissa);
        Dy {
            m: if sign < 0 { -m } else { m },
            e: exp as i32,
        }
    }

    /// Both mantissas at the smaller exponent.
    fn align(&self, other: &Dy) -> (BigInt, BigInt) {
        let e = self.e.min(other.e);
        (
            &self.m << (self.e - e) as usize,
            &other.m << (other.e - e) as usize,
        )
    }

    fn sign(&self) -> Ordering {
        match self.m.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }

    fn cmp(&self, other: &Dy) -> Ordering {
        let (a, b) = self.align(other);
        a.cmp(&b)
    }
}

impl Add for &Dy {
    type Output = Dy;

    fn add(self, other: &Dy) -> Dy {
        let (a, b) = self.align(other);
        Dy {
            m: a + b,
            e: self.e.min(other.e),
        }
    }
}

impl Sub for &Dy {
    type Output = Dy;

    fn sub(self, other: &Dy) -> Dy {
        let (a, b) = self.align(other);
        Dy {
            m: a - b,
            e: self.e.min(other.e),
        }
    }
}

impl Mul for &Dy {
    type Output = Dy;

    fn mul(self, other: &Dy) -> Dy {
        Dy {
            m: &self.m * &other.m,
            e: self.e + other.e,
        }
    }
}

impl Neg for Dy {
    type Output = Dy;

    fn neg(self) -> Dy {
        Dy {
            m: -self.m,
            e: self.e,
        }
    }
}

fn ldexp(mut f: f64, mut k: i64) -> f64 {
    while k > 1000 {
        f *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        f *= 2f64.powi(-1000);
        k += 1000;
    }
    f * 2f64.powi(k as i32)
}

/// `n / d` for `d > 0`, within about one ulp.
fn ratio(n: &Dy, d: &Dy) -> f64 {
    if n.m.is_zero() {
        return 0.0;
    }
    let (nm, dm) = (n.m.magnitude(), d.m.magnitude());
    // keep at least 66 quotient bits so truncation stays far below an ulp
    let s = (dm.bits() as i64 + 66 - nm.bits() as i64).max(0);
    let q = (nm << s as usize) / dm;
    let f = ldexp(q.to_f64().expect("finite"), n.e as i64 - d.e as i64 - s);
    if n.m.sign() == Sign::Minus {
        -f
    } else {
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Axis {
    X,
    Y,
}

impl Axis {
    #[inline]
    pub(crate) fn of(c: Coord, axis: Axis) -> f64 {
        match axis {
            Axis::X => c.x,
            Axis::Y => c.y,
        }
    }
}

/// The point `(x / d, y / d)` with `d > 0`.
#[derive(Debug)]
pub(crate) struct ExactPt {
    x: Dy,
    y: Dy,
    d: Dy,
    approx: Coord,
}

impl ExactPt {
    fn num(&self, axis: Axis) -> &Dy {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }
}

/// A point that is either an input vertex or an exactly represented constructed point.
#[derive(Clone, Debug)]
pub(crate) enum Pt {
    Vertex(Coord),
    Exact(Rc<ExactPt>),
}

impl Pt {
    fn from_parts(x: Dy, y: Dy, d: Dy) -> Pt {
        let (x, y, d) = if d.sign() == Ordering::Less {
            (-x, -y, -d)
        } else {
            (x, y, d)
        };
        let approx = Coord::new(ratio(&x, &d), ratio(&y, &d));
        // constructed points that happen to be representable collapse back to vertices
        if (&Dy::of(approx.x) * &d).cmp(&x) == Ordering::Equal
            && (&Dy::of(approx.y) * &d).cmp(&y) == Ordering::Equal
        {
            Pt::Vertex(approx)
        } else {
            Pt::Exact(Rc::new(ExactPt { x, y, d, approx }))
        }
    }

    fn parts(&self) -> (Dy, Dy, Dy) {
        match self {
            Pt::Vertex(c) => (Dy::of(c.x), Dy::of(c.y), Dy::one()),
            Pt::Exact(e) => (e.x.clone(), e.y.clone(), e.d.clone()),
        }
    }

    #[inline]
    pub(crate) fn approx(&self) -> Coord {
        match self {
            Pt::Vertex(c) => *c,
            Pt::Exact(e) => e.approx,
        }
    }

    /// Compares one coordinate of `self` against a plain value.
    pub(crate) fn cmp_value(&self, axis: Axis, v: f64) -> Ordering {
        match self {
            Pt::Vertex(c) => Axis::of(*c, axis).partial_cmp(&v).expect("finite"),
            Pt::Exact(e) => {
                let a = Axis::of(e.approx, axis);
                let tol = COORD_FILTER * a.abs().max(v.abs());
                if a - v > tol {
                    Ordering::Greater
                } else if v - a > tol {
                    Ordering::Less
                } else {
                    e.num(axis).cmp(&(&Dy::of(v) * &e.d))
                }
            }
        }
    }

    pub(crate) fn cmp_axis(&self, other: &Pt, axis: Axis) -> Ordering {
        match (self, other) {
            (Pt::Vertex(a), Pt::Vertex(b)) => Axis::of(*a, axis)
                .partial_cmp(&Axis::of(*b, axis))
                .expect("finite"),
            (_, Pt::Vertex(b)) => self.cmp_value(axis, Axis::of(*b, axis)),
            (Pt::Vertex(a), _) => other.cmp_value(axis, Axis::of(*a, axis)).reverse(),
            (Pt::Exact(p), Pt::Exact(q)) => {
                let (a, b) = (Axis::of(p.approx, axis), Axis::of(q.approx, axis));
                let tol = COORD_FILTER * 2.0 * a.abs().max(b.abs());
                if a - b > tol {
                    Ordering::Greater
                } else if b - a > tol {
                    Ordering::Less
                } else {
                    (p.num(axis) * &q.d).cmp(&(q.num(axis) * &p.d))
                }
            }
        }
    }

    pub(crate) fn same(&self, other: &Pt) -> bool {
        self.cmp_axis(other, Axis::X) == Ordering::Equal
            && self.cmp_axis(other, Axis::Y) == Ordering::Equal
    }

    pub(crate) fn is_vertex(&self, v: Coord) -> bool {
        self.cmp_value(Axis::X, v.x) == Ordering::Equal
            && self.cmp_value(Axis::Y, v.y) == Ordering::Equal
    }

    /// Orientation of `self` relative to the directed segment `a -> b`.
    pub(crate) fn orient_from(&self, a: Coord, b: Coord) -> Ordering {
        match self {
            Pt::Vertex(c) => orient(a, b, *c),
            Pt::Exact(e) => {
                let p = e.approx;
                let m = a
                    .x
                    .abs()
                    .max(a.y.abs())
                    .max(b.x.abs())
                    .max(b.y.abs())
                    .max(p.x.abs())
                    .max(p.y.abs());
                let det = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
                if det.abs() > ORIENT_FILTER * m * m {
                    return det.partial_cmp(&0.0).expect("finite");
                }
                // det scaled by d > 0
                let (ax, ay, bx, by) = (Dy::of(a.x), Dy::of(a.y), Dy::of(b.x), Dy::of(b.y));
                let l = &(&bx - &ax) * &(&e.y - &(&ay * &e.d));
                let r = &(&by - &ay) * &(&e.x - &(&ax * &e.d));
                l.cmp(&r)
            }
        }
    }

    pub(crate) fn midpoint(&self, other: &Pt) -> Pt {
        if let (Pt::Vertex(a), Pt::Vertex(b)) = (self, other) {
            if let (Some(x), Some(y)) = (exact_half_sum(a.x, b.x), exact_half_sum(a.y, b.y)) {
                return Pt::Vertex(Coord::new(x, y));
            }
        }
        let (x1, y1, d1) = self.parts();
        let (x2, y2, d2) = other.parts();
        let two = Dy {
            m: BigInt::from(1),
            e: 1,
        };
        Pt::from_parts(
            &(&x1 * &d2) + &(&x2 * &d1),
            &(&y1 * &d2) + &(&y2 * &d1),
            &(&d1 * &d2) * &two,
        )
    }
}

/// `(a + b) / 2` when it is exactly representable.
fn exact_half_sum(a: f64, b: f64) -> Option<f64> {
    let s = a + b;
    // two-sum error term
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    let h = s / 2.0;
    (err == 0.0 && h * 2.0 == s && s.is_finite()).then_some(h)
}

/// Exact crossing point of two segments that are known to cross properly.
pub(crate) fn crossing_point(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> Pt {
    // a floating estimate that lies exactly on both lines is the crossing
    let den = (p2.x - p1.x) * (q2.y - q1.y) - (p2.y - p1.y) * (q2.x - q1.x);
    let t = ((q1.x - p1.x) * (q2.y - q1.y) - (q1.y - p1.y) * (q2.x - q1.x)) / den;
    let c = Coord::new(p1.x + t * (p2.x - p1.x), p1.y + t * (p2.y - p1.y));
    if c.x.is_finite()
        && c.y.is_finite()
        && orient(p1, p2, c) == Ordering::Equal
        && orient(q1, q2, c) == Ordering::Equal
    {
        return Pt::Vertex(Coord::new(c.x + 0.0, c.y + 0.0));
    }
    let (p1x, p1y, p2x, p2y) = (Dy::of(p1.x), Dy::of(p1.y), Dy::of(p2.x), Dy::of(p2.y));
    let (q1x, q1y, q2x, q2y) = (Dy::of(q1.x), Dy::of(q1.y), Dy::of(q2.x), Dy::of(q2.y));
    let dpx = &p2x - &p1x;
    let dpy = &p2y - &p1y;
    let dqx = &q2x - &q1x;
    let dqy = &q2y - &q1y;
    let den = &(&dpx * &dqy) - &(&dpy * &dqx);
    debug_assert!(!den.m.is_zero(), "parallel segments do not cross properly");
    let num = &(&(&q1x - &p1x) * &dqy) - &(&(&q1y - &p1y) * &dqx);
    Pt::from_parts(
        &(&p1x * &den) + &(&num * &dpx),
        &(&p1y * &den) + &(&num * &dpy),
        den,
    )
}

/// `true` when `p` (known collinear with `a -> b`) lies within the closed segment.
#[inline]
pub(crate) fn within_box(a: Coord, b: Coord, p: Coord) -> bool {
    a.x.min(b.x) <= p.x && p.x <= a.x.max(b.x) && a.y.min(b.y) <= p.y && p.y <= a.y.max(b.y)
}
