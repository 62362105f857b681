//! Geometry model and the DE-9IM verification kernel.
//!
//! Only LineStrings and Polygons (with holes) are supported. Polygon rings are
//! normalized on construction so that the exterior ring runs counter-clockwise
//! and holes run clockwise; the interior therefore always lies to the left of
//! every directed boundary edge, which the kernel relies on.

pub(crate) mod exact;
mod matrix;
mod relate;
mod relation;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use matrix::{Dimension, IntersectionMatrix, Location};
pub use relate::{relate, verify_pair};
pub use relation::{extract_relations, Relation, RelationSet};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub const fn new(x: f64, y: f64) -> Self {
        Coord { x, y }
    }

    fn lex_cmp(&self, other: &Coord) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl From<(f64, f64)> for Coord {
    fn from((x, y): (f64, f64)) -> Self {
        Coord { x, y }
    }
}

/// Axis-aligned minimum bounding rectangle with closed extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mbr {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Mbr {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        debug_assert!(x_min <= x_max && y_min <= y_max, "inverted mbr");
        Mbr {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn of_coords<'a>(coords: impl IntoIterator<Item = &'a Coord>) -> Option<Mbr> {
        let mut it = coords.into_iter();
        let first = it.next()?;
        let mut mbr = Mbr::new(first.x, first.y, first.x, first.y);
        for c in it {
            mbr.x_min = mbr.x_min.min(c.x);
            mbr.y_min = mbr.y_min.min(c.y);
            mbr.x_max = mbr.x_max.max(c.x);
            mbr.y_max = mbr.y_max.max(c.y);
        }
        Some(mbr)
    }

    /// Closed-interval test: touching edges or corners count.
    #[inline]
    pub fn intersects(&self, other: &Mbr) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    pub fn contains(&self, other: &Mbr) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && other.x_max <= self.x_max
            && other.y_max <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection(&self, other: &Mbr) -> Option<Mbr> {
        self.intersects(other).then(|| Mbr {
            x_min: self.x_min.max(other.x_min),
            y_min: self.y_min.max(other.y_min),
            x_max: self.x_max.min(other.x_max),
            y_max: self.y_max.min(other.y_max),
        })
    }

    pub fn union(&self, other: &Mbr) -> Mbr {
        Mbr {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    /// Area growth needed for `self` to also cover `other`.
    pub fn enlargement(&self, other: &Mbr) -> f64 {
        self.union(other).area() - self.area()
    }
}

pub fn mbr_intersects(a: &Mbr, b: &Mbr) -> bool {
    a.intersects(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeometryKind {
    LineString,
    Polygon,
}

/// Structural problems that make a record unusable; such records are skipped at read time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("geometry is empty")]
    Empty,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("linestring needs at least two distinct points")]
    ShortLine,
    #[error("ring needs at least four points")]
    ShortRing,
    #[error("ring is not closed")]
    OpenRing,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Line(Vec<Coord>),
    /// Exterior ring first, holes after; every ring closed.
    Polygon(Vec<Vec<Coord>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    id: u32,
    shape: Shape,
    mbr: Mbr,
    num_points: usize,
    invalid: Option<&'static str>,
}

impl Geometry {
    pub fn line_string(id: u32, coords: Vec<Coord>) -> Result<Geometry, ShapeError> {
        check_finite(&coords)?;
        if coords.is_empty() {
            return Err(ShapeError::Empty);
        }
        let num_points = coords.len();
        let path = dedup_consecutive(coords);
        if path.len() < 2 {
            return Err(ShapeError::ShortLine);
        }
        let mbr = Mbr::of_coords(&path).expect("nonempty");
        Ok(Geometry {
            id,
            shape: Shape::Line(path),
            mbr,
            num_points,
            invalid: None,
        })
    }

    pub fn polygon(
        id: u32,
        exterior: Vec<Coord>,
        holes: Vec<Vec<Coord>>,
    ) -> Result<Geometry, ShapeError> {
        if exterior.is_empty() {
            return Err(ShapeError::Empty);
        }
        let mut num_points = 0;
        let mut rings = Vec::with_capacity(1 + holes.len());
        for (k, ring) in std::iter::once(exterior).chain(holes).enumerate() {
            check_finite(&ring)?;
            if ring.len() < 4 {
                return Err(ShapeError::ShortRing);
            }
            if ring.first() != ring.last() {
                return Err(ShapeError::OpenRing);
            }
            num_points += ring.len();
            let ring = dedup_consecutive(ring);
            if ring.len() < 4 {
                return Err(ShapeError::ShortRing);
            }
            rings.push((k, ring));
        }

        let mut invalid = None;
        let rings: Vec<Vec<Coord>> = rings
            .into_iter()
            .map(|(k, mut ring)| {
                match ring_orientation(&ring) {
                    Ordering::Equal => invalid = Some("ring has zero area"),
                    Ordering::Less if k == 0 => ring.reverse(),
                    Ordering::Greater if k > 0 => ring.reverse(),
                    _ => {}
                }
                ring
            })
            .collect();
        let mbr = Mbr::of_coords(&rings[0]).expect("nonempty");
        let mut geometry = Geometry {
            id,
            shape: Shape::Polygon(rings),
            mbr,
            num_points,
            invalid,
        };
        if geometry.invalid.is_none() {
            geometry.invalid = relate::polygon_defect(&geometry);
        }
        Ok(geometry)
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn with_id(mut self, id: u32) -> Self {
        self.id = id;
        self
    }

    pub fn kind(&self) -> GeometryKind {
        match self.shape {
            Shape::Line(_) => GeometryKind::LineString,
            Shape::Polygon(_) => GeometryKind::Polygon,
        }
    }

    /// Topological dimension: 1 for LineStrings, 2 for Polygons.
    pub fn dimension(&self) -> u8 {
        match self.shape {
            Shape::Line(_) => 1,
            Shape::Polygon(_) => 2,
        }
    }

    pub fn mbr(&self) -> &Mbr {
        &self.mbr
    }

    /// Number of boundary points as supplied in the input (closing points included).
    pub fn num_points(&self) -> usize {
        self.num_points
    }

    /// `None` when the kernel can verify this geometry; otherwise the defect that blocks it.
    pub fn defect(&self) -> Option<&'static str> {
        self.invalid
    }

    pub fn is_valid(&self) -> bool {
        self.invalid.is_none()
    }

    /// Path of a LineString.
    pub fn path(&self) -> Option<&[Coord]> {
        match &self.shape {
            Shape::Line(p) => Some(p),
            Shape::Polygon(_) => None,
        }
    }

    /// Rings of a Polygon, exterior first.
    pub fn rings(&self) -> Option<&[Vec<Coord>]> {
        match &self.shape {
            Shape::Line(_) => None,
            Shape::Polygon(r) => Some(r),
        }
    }

    pub fn is_closed_line(&self) -> bool {
        matches!(&self.shape, Shape::Line(p) if p.first() == p.last())
    }

    /// Rough heap footprint, used for memory budgeting.
    pub fn heap_bytes(&self) -> usize {
        let coords = match &self.shape {
            Shape::Line(p) => p.capacity(),
            Shape::Polygon(r) => r.iter().map(Vec::capacity).sum::<usize>() + r.len() * 3,
        };
        coords * std::mem::size_of::<Coord>()
    }

    /// WKT rendering, used by the synthetic data generator.
    pub fn to_wkt(&self) -> String {
        fn ring(out: &mut String, coords: &[Coord]) {
            out.push('(');
            for (i, c) in coords.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{} {}", c.x, c.y));
            }
            out.push(')');
        }
        let mut out = String::new();
        match &self.shape {
            Shape::Line(p) => {
                out.push_str("LINESTRING");
                ring(&mut out, p);
            }
            Shape::Polygon(rings) => {
                out.push_str("POLYGON(");
                for (i, r) in rings.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    ring(&mut out, r);
                }
                out.push(')');
            }
        }
        out
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}", self.id, self.to_wkt())
    }
}

pub fn mbr_of(geometry: &Geometry) -> Mbr {
    *geometry.mbr()
}

fn check_finite(coords: &[Coord]) -> Result<(), ShapeError> {
    if coords.iter().all(|c| c.x.is_finite() && c.y.is_finite()) {
        Ok(())
    } else {
        Err(ShapeError::NonFinite)
    }
}

fn dedup_consecutive(mut coords: Vec<Coord>) -> Vec<Coord> {
    // adding +0.0 folds -0.0 into +0.0 so bitwise orderings agree with ==
    for c in &mut coords {
        c.x += 0.0;
        c.y += 0.0;
    }
    coords.dedup();
    coords
}

/// Exact orientation of a closed ring, taken at its lexicographically smallest vertex.
fn ring_orientation(ring: &[Coord]) -> Ordering {
    let n = ring.len() - 1;
    let (i, _) = ring[..n]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.lex_cmp(b.1))
        .expect("ring has vertices");
    let prev = ring[(i + n - 1) % n];
    let next = ring[(i + 1) % n];
    exact::orient(prev, ring[i], next)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn c(x: f64, y: f64) -> Coord {
        Coord::new(x, y)
    }

    #[test]
    fn mbr_of_fixture_shapes() {
        let l3 = Geometry::line_string(0, vec![c(10.0, 5.0), c(15.0, 5.0)]).unwrap();
        assert_eq!(mbr_of(&l3), Mbr::new(10.0, 5.0, 15.0, 5.0));
        let p1 = Geometry::polygon(
            1,
            vec![c(0., 0.), c(10., 0.), c(10., 10.), c(0., 10.), c(0., 0.)],
            vec![],
        )
        .unwrap();
        assert_eq!(mbr_of(&p1), Mbr::new(0.0, 0.0, 10.0, 10.0));
        let p2 = Geometry::polygon(
            2,
            vec![c(2., 2.), c(4., 2.), c(4., 4.), c(2., 4.), c(2., 2.)],
            vec![],
        )
        .unwrap();
        assert_eq!(mbr_of(&p2), Mbr::new(2.0, 2.0, 4.0, 4.0));
    }

    #[test]
    fn mbr_intersection_is_closed() {
        let unit = Mbr::new(0.0, 0.0, 1.0, 1.0);
        assert!(mbr_intersects(&Mbr::new(0., 0., 10., 10.), &Mbr::new(2., 2., 4., 4.)));
        assert!(mbr_intersects(&unit, &Mbr::new(1.0, 1.0, 2.0, 2.0)));
        assert!(!mbr_intersects(&unit, &Mbr::new(2.0, 2.0, 3.0, 3.0)));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            Geometry::polygon(0, vec![c(0., 0.), c(10., 0.)], vec![]).unwrap_err(),
            ShapeError::ShortRing
        );
        assert_eq!(
            Geometry::polygon(0, vec![c(0., 0.), c(1., 0.), c(1., 1.), c(0., 1.)], vec![])
                .unwrap_err(),
            ShapeError::OpenRing
        );
        assert_eq!(
            Geometry::line_string(0, vec![c(1., 1.), c(1., 1.)]).unwrap_err(),
            ShapeError::ShortLine
        );
        assert_eq!(
            Geometry::line_string(0, vec![c(f64::NAN, 1.), c(1., 1.)]).unwrap_err(),
            ShapeError::NonFinite
        );
    }

    #[test]
    fn rings_are_normalized() {
        let cw = vec![c(0., 0.), c(0., 10.), c(10., 10.), c(10., 0.), c(0., 0.)];
        let hole_ccw = vec![c(2., 2.), c(4., 2.), c(4., 4.), c(2., 4.), c(2., 2.)];
        let g = Geometry::polygon(0, cw, vec![hole_ccw]).unwrap();
        let rings = g.rings().unwrap();
        assert_eq!(ring_orientation(&rings[0]), Ordering::Greater);
        assert_eq!(ring_orientation(&rings[1]), Ordering::Less);
        assert!(g.is_valid());
        assert_eq!(g.num_points(), 10);
    }

    #[test]
    fn bow_tie_is_flagged() {
        let g = Geometry::polygon(
            0,
            vec![c(0., 0.), c(10., 10.), c(10., 0.), c(0., 10.), c(0., 0.)],
            vec![],
        )
        .unwrap();
        assert!(!g.is_valid());
    }

    #[test]
    fn hole_outside_shell_is_flagged() {
        let g = Geometry::polygon(
            0,
            vec![c(0., 0.), c(10., 0.), c(10., 10.), c(0., 10.), c(0., 0.)],
            vec![vec![c(20., 20.), c(22., 20.), c(22., 22.), c(20., 20.)]],
        )
        .unwrap();
        assert!(!g.is_valid());
    }
}
