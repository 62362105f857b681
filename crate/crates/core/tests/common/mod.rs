#![allow(dead_code)]


use geo::coordinate_position::CoordPos;
use geo::dimensions::Dimensions;
use geo::Relate;
use geolink::geometry::{Coord, Geometry};
use geolink::workbench::synth;
use rand::Rng;

fn ls(coords: &[Coord]) -> geo::LineString<f64> {
    coords.iter().map(|c| geo::coord! { x: c.x, y: c.y }).collect()
}

pub fn to_geo(g: &Geometry) -> geo::Geometry<f64> {
    match (g.path(), g.rings()) {
        (Some(p), _) => geo::Geometry::LineString(ls(p)),
        (_, Some(r)) => {
            geo::Geometry::Polygon(geo::Polygon::new(ls(&r[0]), r[1..].iter().map(|h| ls(h)).collect()))
        }
        _ => unreachable!(),
    }
}

/// DE-9IM matrix computed by the `geo` crate, rendered like ours.
pub fn reference_matrix(a: &Geometry, b: &Geometry) -> String {
    let m = to_geo(a).relate(&to_geo(b));
    let pos = [CoordPos::Inside, CoordPos::OnBoundary, CoordPos::Outside];
    let mut out = String::with_capacity(9);
    for pa in pos {
        for pb in pos {
            out.push(match m.get(pa, pb) {
                Dimensions::Empty => 'F',
                Dimensions::ZeroDimensional => '0',
                Dimensions::OneDimensional => '1',
                Dimensions::TwoDimensional => '2',
            });
        }
    }
    out
}

pub fn c(x: f64, y: f64) -> Coord {
    Coord::new(x, y)
}

pub fn line(id: u32, pts: &[(f64, f64)]) -> Geometry {
    Geometry::line_string(id, pts.iter().map(|&(x, y)| c(x, y)).collect()).unwrap()
}

pub fn poly(id: u32, shell: &[(f64, f64)], holes: &[&[(f64, f64)]]) -> Geometry {
    let ring = |r: &[(f64, f64)]| {
        let mut v: Vec<Coord> = r.iter().map(|&(x, y)| c(x, y)).collect();
        if v.first() != v.last() {
            v.push(v[0]);
        }
        v
    };
    Geometry::polygon(id, ring(shell), holes.iter().map(|h| ring(h)).collect()).unwrap()
}

pub fn rect(id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
    poly(id, &[(x0, y0), (x1, y0), (x1, y1), (x0, y1)], &[])
}

/// A random geometry in one of several regimes: free floats, integer-snapped
/// (shared vertices, collinear pieces), or axis-aligned boxes (shared edges).
pub fn random_geometry(rng: &mut impl Rng, id: u32) -> Geometry {
    loop {
        let regime = rng.gen_range(0..4);
        let g = match regime {
            0 | 1 => {
                let snap = (regime == 1).then_some(1.0);
                let centre = c(rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0));
                let r = rng.gen_range(1.0..6.0);
                if rng.gen_bool(0.5) {
                    let n = rng.gen_range(2..6);
                    synth::random_line(rng, centre, r, n, snap, id)
                } else {
                    let n = rng.gen_range(3..9);
                    let hole = rng.gen_bool(0.3);
                    synth::random_polygon(rng, centre, r, n, hole, snap, id)
                }
            }
            2 => {
                let x0 = rng.gen_range(0..10) as f64;
                let y0 = rng.gen_range(0..10) as f64;
                let x1 = x0 + rng.gen_range(1..6) as f64;
                let y1 = y0 + rng.gen_range(1..6) as f64;
                if rng.gen_bool(0.3) && x1 - x0 >= 3.0 && y1 - y0 >= 3.0 {
                    Some(poly(
                        id,
                        &[(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
                        &[&[(x0 + 1.0, y0 + 1.0), (x0 + 2.0, y0 + 1.0), (x0 + 2.0, y0 + 2.0), (x0 + 1.0, y0 + 2.0)]],
                    ))
                } else {
                    Some(rect(id, x0, y0, x1, y1))
                }
            }
            _ => {
                // axis-parallel or diagonal integer polyline
                let n = rng.gen_range(2..5);
                let mut p = (rng.gen_range(0..12) as f64, rng.gen_range(0..12) as f64);
                let mut pts = vec![p];
                for _ in 1..n {
                    let (dx, dy) = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0)]
                        [rng.gen_range(0..6)];
                    let k = rng.gen_range(1..5) as f64;
                    p = (p.0 + dx * k, p.1 + dy * k);
                    pts.push(p);
                }
                Geometry::line_string(id, pts.iter().map(|&(x, y)| c(x, y)).collect()).ok()
            }
        };
        if let Some(g) = g.filter(Geometry::is_valid) {
            return g;
        }
    }
}

/// Pairs that exercise the degenerate configurations explicitly.
pub fn curated_corpus() -> Vec<(&'static str, Geometry, Geometry)> {
    let sq = rect(0, 0.0, 0.0, 10.0, 10.0);
    let holed = poly(0, &[(0., 0.), (10., 0.), (10., 10.), (0., 10.)], &[&[(3., 3.), (7., 3.), (7., 7.), (3., 7.)]]);
    vec![
        ("contains", sq.clone(), rect(1, 2.0, 2.0, 4.0, 4.0)),
        ("shared edge", sq.clone(), rect(1, 10.0, 0.0, 20.0, 10.0)),
        ("partial shared edge", sq.clone(), rect(1, 10.0, 5.0, 20.0, 15.0)),
        ("corner touch", sq.clone(), rect(1, 10.0, 10.0, 20.0, 20.0)),
        ("vertex on edge", sq.clone(), poly(1, &[(10., 5.), (15., 0.), (15., 10.)], &[])),
        ("inner shared edge", sq.clone(), rect(1, 0.0, 0.0, 5.0, 5.0)),
        ("equal", sq.clone(), rect(1, 0.0, 0.0, 10.0, 10.0)),
        ("equal rotated start", sq.clone(), poly(1, &[(10., 10.), (0., 10.), (0., 0.), (10., 0.)], &[])),
        ("overlap", sq.clone(), rect(1, 5.0, 5.0, 15.0, 15.0)),
        ("hole contains", holed.clone(), rect(1, 4.0, 4.0, 6.0, 6.0)),
        ("hole filled", holed.clone(), rect(1, 3.0, 3.0, 7.0, 7.0)),
        ("hole edge shared", holed.clone(), rect(1, 3.0, 3.0, 5.0, 5.0)),
        ("hole straddle", holed.clone(), rect(1, 2.0, 2.0, 5.0, 5.0)),
        ("line in hole", holed.clone(), line(1, &[(4., 4.), (6., 6.)])),
        ("line along hole", holed.clone(), line(1, &[(3., 3.), (7., 3.)])),
        ("line through hole", holed.clone(), line(1, &[(1., 5.), (9., 5.)])),
        ("line touches", sq.clone(), line(1, &[(10., 5.), (15., 5.)])),
        ("line along edge", sq.clone(), line(1, &[(2., 0.), (8., 0.)])),
        ("line beyond edge", sq.clone(), line(1, &[(-5., 0.), (15., 0.)])),
        ("line crosses", sq.clone(), line(1, &[(-5., 5.), (15., 5.)])),
        ("line inside", sq.clone(), line(1, &[(1., 1.), (9., 9.)])),
        ("line corner to corner", sq.clone(), line(1, &[(0., 0.), (10., 10.)])),
        ("line touches corner", sq.clone(), line(1, &[(10., 10.), (12., 15.)])),
        ("line in and along", sq.clone(), line(1, &[(5., 5.), (10., 5.), (10., 8.)])),
        ("crossing lines", line(0, &[(10., 5.), (15., 5.)]), line(1, &[(12., 0.), (12., 8.)])),
        ("T lines", line(0, &[(0., 0.), (10., 0.)]), line(1, &[(5., 0.), (5., 5.)])),
        ("end to end", line(0, &[(0., 0.), (10., 0.)]), line(1, &[(10., 0.), (10., 5.)])),
        ("collinear overlap", line(0, &[(0., 0.), (10., 0.)]), line(1, &[(5., 0.), (15., 0.)])),
        ("collinear contained", line(0, &[(0., 0.), (10., 0.)]), line(1, &[(2., 0.), (8., 0.)])),
        ("equal lines reversed", line(0, &[(0., 0.), (10., 0.)]), line(1, &[(10., 0.), (0., 0.)])),
        ("equal lines split", line(0, &[(0., 0.), (10., 0.)]), line(1, &[(0., 0.), (4., 0.), (10., 0.)])),
        ("closed line", line(0, &[(0., 0.), (4., 0.), (4., 4.), (0., 4.), (0., 0.)]), line(1, &[(0., 0.), (-3., -3.)])),
        ("ring vs polygon", line(0, &[(0., 0.), (10., 0.), (10., 10.), (0., 10.), (0., 0.)]), sq.clone()),
        ("zigzag overlap", line(0, &[(0., 0.), (2., 2.), (4., 0.), (6., 2.)]), line(1, &[(1., 1.), (2., 2.), (3., 1.)])),
        ("non-dyadic crossing", line(0, &[(0., 0.), (3., 1.)]), line(1, &[(1., -1.), (1., 1.)])),
        ("thin sliver", poly(0, &[(0., 0.), (10., 0.), (10., 0.1)], &[]), poly(1, &[(0., 0.), (10., 0.1), (0., 0.1)], &[])),
    ]
}

/// `true` for an open line whose endpoint also lies on one of its other
/// segments. Point-set topology puts such a point on the boundary only, while
/// graph-labelling implementations report it on both interior and boundary.
pub fn endpoint_on_own_interior(g: &Geometry) -> bool {
    use geo::Intersects;
    let Some(p) = g.path() else { return false };
    let n = p.len();
    if p[0] == p[n - 1] {
        return false;
    }
    let seg = |k: usize| geo::Line::new(geo::coord! { x: p[k].x, y: p[k].y }, geo::coord! { x: p[k + 1].x, y: p[k + 1].y });
    let first = geo::Point::new(p[0].x, p[0].y);
    let last = geo::Point::new(p[n - 1].x, p[n - 1].y);
    (1..n - 1).any(|k| seg(k).intersects(&first)) || (0..n - 2).any(|k| seg(k).intersects(&last))
}

/// `true` when a line of the pair crosses itself at a point on the other
/// geometry's linework; the reference library mislabels that node and reports
/// a 1-dimensional interior/boundary intersection.
pub fn self_crossing_on_other(a: &Geometry, b: &Geometry) -> bool {
    use geo::line_intersection::{line_intersection, LineIntersection};
    use geo::Intersects;
    let check = |l: &Geometry, other: &Geometry| {
        let Some(p) = l.path() else { return false };
        let segs: Vec<geo::Line<f64>> = p
            .windows(2)
            .map(|w| geo::Line::new(geo::coord! { x: w[0].x, y: w[0].y }, geo::coord! { x: w[1].x, y: w[1].y }))
            .collect();
        let linework: Vec<geo::LineString<f64>> = match (other.path(), other.rings()) {
            (Some(q), _) => vec![ls(q)],
            (_, Some(r)) => r.iter().map(|x| ls(x)).collect(),
            _ => unreachable!(),
        };
        for i in 0..segs.len() {
            for j in i + 2..segs.len() {
                if let Some(LineIntersection::SinglePoint { intersection, .. }) = line_intersection(segs[i], segs[j]) {
                    if linework.iter().any(|w| w.intersects(&intersection)) {
                        return true;
                    }
                }
            }
        }
        false
    };
    check(a, b) || check(b, a)
}
