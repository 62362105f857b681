//! DE-9IM computation for LineString/Polygon pairs.
//!
//! Both geometries are noded against each other (crossings, vertex touches and
//! collinear overlaps, all decided with exact predicates). Every resulting
//! sub-segment and node of one geometry is then located in the other, and each
//! (own location, other location) pair raises the corresponding matrix cell.
//! Area cells come from which side of a polygon boundary piece the other
//! geometry's interior lies on.

use std::cmp::Ordering;

use super::exact::{crossing_point, orient, within_box, Axis, Pt};
use super::matrix::{Dimension, IntersectionMatrix, Location};
use super::relation::{extract_relations, RelationSet};
use super::{Coord, Geometry, Mbr, Shape};
use crate::error::{Error, Result};

/// Computes the intersection matrix of `a` (rows) against `b` (columns).
pub fn relate(a: &Geometry, b: &Geometry) -> Result<IntersectionMatrix> {
    for g in [a, b] {
        if let Some(reason) = g.defect() {
            return Err(Error::DegenerateGeometry { id: g.id(), reason });
        }
    }
    let mut im = IntersectionMatrix::empty();
    im.set(Location::Exterior, Location::Exterior, Dimension::Two);

    if !a.mbr().intersects(b.mbr()) {
        disjoint_cells(a, &mut im, false);
        disjoint_cells(b, &mut im, true);
        return Ok(im);
    }

    match (a.dimension(), b.dimension()) {
        (2, 1) => im.set(Location::Interior, Location::Exterior, Dimension::Two),
        (1, 2) => im.set(Location::Exterior, Location::Interior, Dimension::Two),
        _ => {}
    }

    let mut side_a = Side::new(a);
    let mut side_b = Side::new(b);
    node(&mut side_a, &mut side_b);
    side_a.label(b, &mut |own, other, d| im.raise(own, other, d))?;
    side_b.label(a, &mut |own, other, d| im.raise(other, own, d))?;
    Ok(im)
}

/// Computes every positive relation between `a` and `b` at once.
///
/// Callers are expected to have checked that the MBRs intersect; an empty set
/// means the pair is disjoint.
pub fn verify_pair(a: &Geometry, b: &Geometry) -> Result<RelationSet> {
    let im = relate(a, b)?;
    Ok(extract_relations(&im, a.dimension(), b.dimension()))
}

fn disjoint_cells(g: &Geometry, im: &mut IntersectionMatrix, transpose: bool) {
    let mut put = |own: Location, d: Dimension| {
        if transpose {
            im.raise(Location::Exterior, own, d)
        } else {
            im.raise(own, Location::Exterior, d)
        }
    };
    match g.dimension() {
        2 => {
            put(Location::Interior, Dimension::Two);
            put(Location::Boundary, Dimension::One);
        }
        _ => {
            put(Location::Interior, Dimension::One);
            if !g.is_closed_line() {
                put(Location::Boundary, Dimension::Zero);
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Seg {
    p: Coord,
    q: Coord,
    ring: usize,
    /// Position within its ring/path.
    idx: usize,
}

impl Seg {
    fn bbox(&self) -> Mbr {
        Mbr {
            x_min: self.p.x.min(self.q.x),
            y_min: self.p.y.min(self.q.y),
            x_max: self.p.x.max(self.q.x),
            y_max: self.p.y.max(self.q.y),
        }
    }

    /// Axis along which the segment is strictly monotone.
    fn axis(&self) -> Axis {
        if self.p.x != self.q.x {
            Axis::X
        } else {
            Axis::Y
        }
    }

    fn increasing(&self) -> bool {
        let ax = self.axis();
        Axis::of(self.p, ax) < Axis::of(self.q, ax)
    }

    /// Order of two points on the segment, in the segment's direction.
    fn along(&self, a: &Pt, b: &Pt) -> Ordering {
        let o = a.cmp_axis(b, self.axis());
        if self.increasing() {
            o
        } else {
            o.reverse()
        }
    }
}

fn segments(g: &Geometry) -> Vec<Seg> {
    let mut out = Vec::new();
    let mut push = |ring: usize, coords: &[Coord]| {
        out.extend(coords.windows(2).enumerate().map(|(idx, w)| Seg {
            p: w[0],
            q: w[1],
            ring,
            idx,
        }))
    };
    match &g.shape {
        Shape::Line(path) => push(0, path),
        Shape::Polygon(rings) => {
            for (k, r) in rings.iter().enumerate() {
                push(k, r)
            }
        }
    }
    out
}

/// Calls `f(i, j)` for every pair of segments with intersecting bounding boxes.
fn box_pairs(a: &[Seg], b: &[Seg], mut f: impl FnMut(usize, usize)) {
    let ba: Vec<Mbr> = a.iter().map(Seg::bbox).collect();
    let bb: Vec<Mbr> = b.iter().map(Seg::bbox).collect();
    if a.len() * b.len() <= 64 {
        for (i, x) in ba.iter().enumerate() {
            for (j, y) in bb.iter().enumerate() {
                if x.intersects(y) {
                    f(i, j);
                }
            }
        }
        return;
    }
    let mut oa: Vec<usize> = (0..a.len()).collect();
    let mut ob: Vec<usize> = (0..b.len()).collect();
    oa.sort_by(|&i, &j| ba[i].x_min.total_cmp(&ba[j].x_min));
    ob.sort_by(|&i, &j| bb[i].x_min.total_cmp(&bb[j].x_min));
    let (mut ia, mut ib) = (0, 0);
    let mut act_a: Vec<usize> = Vec::new();
    let mut act_b: Vec<usize> = Vec::new();
    while ia < oa.len() || ib < ob.len() {
        let take_a = ib >= ob.len() || (ia < oa.len() && ba[oa[ia]].x_min <= bb[ob[ib]].x_min);
        if take_a {
            let i = oa[ia];
            ia += 1;
            let x = ba[i];
            act_b.retain(|&j| bb[j].x_max >= x.x_min);
            for &j in &act_b {
                if bb[j].y_min <= x.y_max && x.y_min <= bb[j].y_max {
                    f(i, j);
                }
            }
            act_a.push(i);
        } else {
            let j = ob[ib];
            ib += 1;
            let y = bb[j];
            act_a.retain(|&i| ba[i].x_max >= y.x_min);
            for &i in &act_a {
                if ba[i].y_min <= y.y_max && y.y_min <= ba[i].y_max {
                    f(i, j);
                }
            }
            act_b.push(j);
        }
    }
}

struct Overlap {
    /// Start and end of the shared piece, ordered along the owning segment.
    lo: Pt,
    hi: Pt,
    same_direction: bool,
}

struct Side<'g> {
    geom: &'g Geometry,
    segs: Vec<Seg>,
    nodes: Vec<Vec<Pt>>,
    overlaps: Vec<Vec<Overlap>>,
    touch_start: Vec<bool>,
    touch_end: Vec<bool>,
}

impl<'g> Side<'g> {
    fn new(geom: &'g Geometry) -> Self {
        let segs = segments(geom);
        let n = segs.len();
        Side {
            geom,
            segs,
            nodes: (0..n).map(|_| Vec::new()).collect(),
            overlaps: (0..n).map(|_| Vec::new()).collect(),
            touch_start: vec![false; n],
            touch_end: vec![false; n],
        }
    }

    fn add_node(&mut self, i: usize, pt: Pt) {
        let s = self.segs[i];
        if pt.is_vertex(s.p) {
            self.touch_start[i] = true;
        } else if pt.is_vertex(s.q) {
            self.touch_end[i] = true;
        } else {
            self.nodes[i].push(pt);
        }
    }

    fn is_polygon(&self) -> bool {
        self.geom.dimension() == 2
    }

    /// Location in the own geometry of a point lying on it.
    fn own_point_location(&self, pt: &Pt) -> Location {
        if self.is_polygon() {
            Location::Boundary
        } else {
            line_point_location(self.geom, pt)
        }
    }

    /// `true` if the shared vertex between segment `i` and its predecessor is touched.
    fn start_touched(&self, i: usize) -> bool {
        self.touch_start[i] || self.prev(i).is_some_and(|h| self.touch_end[h])
    }

    fn end_touched(&self, i: usize) -> bool {
        self.touch_end[i] || self.next(i).is_some_and(|h| self.touch_start[h])
    }

    fn prev(&self, i: usize) -> Option<usize> {
        let s = self.segs[i];
        if s.idx > 0 {
            Some(i - 1)
        } else if self.is_polygon() {
            // wrap to the last segment of the same ring
            let mut j = i;
            while j + 1 < self.segs.len() && self.segs[j + 1].ring == s.ring {
                j += 1;
            }
            Some(j)
        } else if self.geom.is_closed_line() {
            Some(self.segs.len() - 1)
        } else {
            None
        }
    }

    fn next(&self, i: usize) -> Option<usize> {
        let s = self.segs[i];
        if i + 1 < self.segs.len() && self.segs[i + 1].ring == s.ring {
            Some(i + 1)
        } else if self.is_polygon() {
            Some(i - s.idx)
        } else if self.geom.is_closed_line() {
            Some(0)
        } else {
            None
        }
    }

    /// Locates every piece of the own geometry in `other` and reports cells as
    /// `(own location, other location, dimension)`.
    fn label(
        &mut self,
        other: &Geometry,
        put: &mut dyn FnMut(Location, Location, Dimension),
    ) -> Result<()> {
        let own_poly = self.is_polygon();
        let other_poly = other.dimension() == 2;
        let own_curve = if own_poly {
            Location::Boundary
        } else {
            Location::Interior
        };
        let inconsistent = || Error::DegenerateGeometry {
            id: other.id(),
            reason: "inconsistent noding",
        };

        // location of the last sub-segment, reused across an untouched shared vertex
        let mut carried: Option<Location> = None;
        for i in 0..self.segs.len() {
            let seg = self.segs[i];
            let mut interior = std::mem::take(&mut self.nodes[i]);
            interior.sort_by(|a, b| seg.along(a, b));
            interior.dedup_by(|a, b| a.same(b));

            let mut seq = Vec::with_capacity(interior.len() + 2);
            let mut touched = Vec::with_capacity(interior.len() + 2);
            seq.push(Pt::Vertex(seg.p));
            touched.push(self.start_touched(i));
            for pt in interior {
                seq.push(pt);
                touched.push(true);
            }
            seq.push(Pt::Vertex(seg.q));
            touched.push(self.end_touched(i));

            if seg.idx == 0 || touched[0] {
                carried = None;
            }

            let last = seq.len() - 1;
            for k in 0..last {
                let (u, v) = (&seq[k], &seq[k + 1]);
                let overlap = self.overlaps[i].iter().find(|o| {
                    seg.along(&o.lo, u) != Ordering::Greater
                        && seg.along(v, &o.hi) != Ordering::Greater
                });
                let loc = if let Some(o) = overlap {
                    let loc = if other_poly {
                        Location::Boundary
                    } else {
                        Location::Interior
                    };
                    if own_poly && other_poly {
                        if o.same_direction {
                            put(Location::Interior, Location::Interior, Dimension::Two);
                        } else {
                            put(Location::Interior, Location::Exterior, Dimension::Two);
                            put(Location::Exterior, Location::Interior, Dimension::Two);
                        }
                    }
                    loc
                } else if !other_poly {
                    Location::Exterior
                } else {
                    let loc = match (k, carried) {
                        (0, Some(l)) => l,
                        _ if !touched[k] => locate_in_polygon(other, u),
                        _ if !touched[k + 1] => locate_in_polygon(other, v),
                        _ => locate_in_polygon(other, &u.midpoint(v)),
                    };
                    if loc == Location::Boundary {
                        return Err(inconsistent());
                    }
                    if own_poly {
                        match loc {
                            Location::Interior => {
                                put(Location::Interior, Location::Interior, Dimension::Two);
                                put(Location::Exterior, Location::Interior, Dimension::Two);
                            }
                            _ => put(Location::Interior, Location::Exterior, Dimension::Two),
                        }
                    }
                    loc
                };
                put(own_curve, loc, Dimension::One);

                // the point opening this sub-segment
                let other_loc = if touched[k] {
                    linework_location(other, u)
                } else {
                    loc
                };
                put(self.own_point_location(u), other_loc, Dimension::Zero);
                if k + 1 == last {
                    let other_loc = if touched[last] {
                        linework_location(other, v)
                    } else {
                        loc
                    };
                    put(self.own_point_location(v), other_loc, Dimension::Zero);
                    carried = (!touched[last] && overlap.is_none()).then_some(loc);
                }
            }
        }
        Ok(())
    }
}

/// Nodes both sides against each other.
fn node(a: &mut Side<'_>, b: &mut Side<'_>) {
    let mut hits: Vec<(usize, usize)> = Vec::new();
    box_pairs(&a.segs, &b.segs, |i, j| hits.push((i, j)));
    for (i, j) in hits {
        let (sa, sb) = (a.segs[i], b.segs[j]);
        let o1 = orient(sa.p, sa.q, sb.p);
        let o2 = orient(sa.p, sa.q, sb.q);
        if o1 == Ordering::Equal && o2 == Ordering::Equal {
            collinear(a, i, b, j);
            continue;
        }
        let o3 = orient(sb.p, sb.q, sa.p);
        let o4 = orient(sb.p, sb.q, sa.q);
        let strict = |x: Ordering, y: Ordering| x != Ordering::Equal && y != Ordering::Equal && x != y;
        if strict(o1, o2) && strict(o3, o4) {
            let pt = crossing_point(sa.p, sa.q, sb.p, sb.q);
            a.add_node(i, pt.clone());
            b.add_node(j, pt);
            continue;
        }
        let mut touch = |pt: Coord| {
            a.add_node(i, Pt::Vertex(pt));
            b.add_node(j, Pt::Vertex(pt));
        };
        if o1 == Ordering::Equal && within_box(sa.p, sa.q, sb.p) {
            touch(sb.p);
        }
        if o2 == Ordering::Equal && within_box(sa.p, sa.q, sb.q) {
            touch(sb.q);
        }
        if o3 == Ordering::Equal && within_box(sb.p, sb.q, sa.p) {
            touch(sa.p);
        }
        if o4 == Ordering::Equal && within_box(sb.p, sb.q, sa.q) {
            touch(sa.q);
        }
    }
}

fn collinear(a: &mut Side<'_>, i: usize, b: &mut Side<'_>, j: usize) {
    let (sa, sb) = (a.segs[i], b.segs[j]);
    let ax = sa.axis();
    let key = |c: Coord| Axis::of(c, ax);
    let (a0, a1) = (key(sa.p).min(key(sa.q)), key(sa.p).max(key(sa.q)));
    let (b0, b1) = (key(sb.p).min(key(sb.q)), key(sb.p).max(key(sb.q)));
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    if lo > hi {
        return;
    }
    let pick = |v: f64| {
        [sa.p, sa.q, sb.p, sb.q]
            .into_iter()
            .find(|c| key(*c) == v)
            .expect("overlap end is an endpoint")
    };
    let (plo, phi) = (pick(lo), pick(hi));
    a.add_node(i, Pt::Vertex(plo));
    b.add_node(j, Pt::Vertex(plo));
    if lo == hi {
        return;
    }
    a.add_node(i, Pt::Vertex(phi));
    b.add_node(j, Pt::Vertex(phi));
    let same_direction = sa.increasing() == (key(sb.p) < key(sb.q));
    let ordered = |s: &Seg| {
        if s.along(&Pt::Vertex(plo), &Pt::Vertex(phi)) == Ordering::Less {
            (Pt::Vertex(plo), Pt::Vertex(phi))
        } else {
            (Pt::Vertex(phi), Pt::Vertex(plo))
        }
    };
    let (lo_a, hi_a) = ordered(&sa);
    a.overlaps[i].push(Overlap {
        lo: lo_a,
        hi: hi_a,
        same_direction,
    });
    let (lo_b, hi_b) = ordered(&sb);
    b.overlaps[j].push(Overlap {
        lo: lo_b,
        hi: hi_b,
        same_direction,
    });
}

/// Location in a line of a point known to lie on it (endpoint rule for open lines).
fn line_point_location(line: &Geometry, pt: &Pt) -> Location {
    let path = line.path().expect("line geometry");
    let (first, last) = (path[0], path[path.len() - 1]);
    if first != last && (pt.is_vertex(first) || pt.is_vertex(last)) {
        Location::Boundary
    } else {
        Location::Interior
    }
}

/// Location in `g` of a point known to lie on its linework.
fn linework_location(g: &Geometry, pt: &Pt) -> Location {
    if g.dimension() == 2 {
        Location::Boundary
    } else {
        line_point_location(g, pt)
    }
}

pub(crate) fn locate_in_ring(ring: &[Coord], pt: &Pt) -> Location {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ya = pt.cmp_value(Axis::Y, a.y);
        let yb = pt.cmp_value(Axis::Y, b.y);
        if ya == Ordering::Equal {
            let xa = pt.cmp_value(Axis::X, a.x);
            if xa == Ordering::Equal {
                return Location::Boundary;
            }
            if yb == Ordering::Equal {
                let xb = pt.cmp_value(Axis::X, b.x);
                if xa != xb {
                    return Location::Boundary;
                }
                continue;
            }
        }
        // half-open straddle rule: exactly one endpoint strictly above the point
        let a_above = ya == Ordering::Less;
        let b_above = yb == Ordering::Less;
        if a_above != b_above {
            let o = pt.orient_from(a, b);
            if o == Ordering::Equal {
                return Location::Boundary;
            }
            if (b_above && o == Ordering::Greater) || (a_above && o == Ordering::Less) {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Interior
    } else {
        Location::Exterior
    }
}

pub(crate) fn locate_in_polygon(g: &Geometry, pt: &Pt) -> Location {
    let rings = g.rings().expect("polygon geometry");
    let c = pt.approx();
    let m = g.mbr();
    // the approximation is within an ulp, so a generous margin keeps this exact
    let pad = 1e-9 * (m.width() + m.height()) + 1e-300;
    if c.x < m.x_min - pad || c.x > m.x_max + pad || c.y < m.y_min - pad || c.y > m.y_max + pad
    {
        return Location::Exterior;
    }
    match locate_in_ring(&rings[0], pt) {
        Location::Interior => {}
        other => return other,
    }
    for hole in &rings[1..] {
        match locate_in_ring(hole, pt) {
            Location::Exterior => {}
            Location::Boundary => return Location::Boundary,
            Location::Interior => return Location::Exterior,
        }
    }
    Location::Interior
}

/// Structural defects that would break the kernel's side-of-boundary reasoning.
pub(super) fn polygon_defect(g: &Geometry) -> Option<&'static str> {
    let rings = g.rings()?;
    let segs = segments(g);
    let ring_len: Vec<usize> = rings.iter().map(|r| r.len() - 1).collect();
    let mut defect = None;
    // (x bits, y bits, ring) for every point where two different rings touch
    let mut touches: Vec<(u64, u64, usize)> = Vec::new();
    box_pairs(&segs, &segs, |i, j| {
        if i >= j || defect.is_some() {
            return;
        }
        let (s, t) = (segs[i], segs[j]);
        let o1 = orient(s.p, s.q, t.p);
        let o2 = orient(s.p, s.q, t.q);
        let o3 = orient(t.p, t.q, s.p);
        let o4 = orient(t.p, t.q, s.q);
        let collinear = o1 == Ordering::Equal && o2 == Ordering::Equal;
        let strict = |x: Ordering, y: Ordering| x != Ordering::Equal && y != Ordering::Equal && x != y;
        let crossing = strict(o1, o2) && strict(o3, o4);
        let touch_points = [
            (o1 == Ordering::Equal && within_box(s.p, s.q, t.p)).then_some(t.p),
            (o2 == Ordering::Equal && within_box(s.p, s.q, t.q)).then_some(t.q),
            (o3 == Ordering::Equal && within_box(t.p, t.q, s.p)).then_some(s.p),
            (o4 == Ordering::Equal && within_box(t.p, t.q, s.q)).then_some(s.q),
        ];
        let touching = touch_points.iter().any(Option::is_some);
        let overlapping = collinear && collinear_overlap_len(&s, &t);
        if s.ring != t.ring {
            if crossing || overlapping {
                defect = Some("rings cross or share an edge");
            }
            for c in touch_points.into_iter().flatten() {
                touches.push((c.x.to_bits(), c.y.to_bits(), s.ring));
                touches.push((c.x.to_bits(), c.y.to_bits(), t.ring));
            }
            return;
        }
        let n = ring_len[s.ring];
        let adjacent = t.idx == s.idx + 1 || (s.idx == 0 && t.idx == n - 1);
        if adjacent {
            if overlapping {
                defect = Some("ring folds back on itself");
            }
        } else if crossing || touching || overlapping {
            defect = Some("ring self-intersects");
        }
    });
    if defect.is_some() {
        return defect;
    }
    if rings.len() == 1 {
        return None;
    }
    if touches_form_cycle(rings.len(), touches) {
        return Some("interior is disconnected");
    }

    // Rings no longer cross, so containment can be read off the kernel itself.
    let single = |r: &Vec<Coord>| Geometry::polygon(g.id(), r.clone(), vec![]).expect("ring already checked");
    let shell = single(&rings[0]);
    let holes: Vec<Geometry> = rings[1..].iter().map(single).collect();
    for (k, hole) in holes.iter().enumerate() {
        let m = relate(hole, &shell).ok()?;
        if !m.matches("**F**F***") {
            return Some("hole outside shell");
        }
        for other in &holes[k + 1..] {
            let m = relate(hole, other).ok()?;
            if m.get(Location::Interior, Location::Interior) != Dimension::Empty {
                return Some("nested holes");
            }
        }
    }
    None
}

/// Rings and touch points form a bipartite graph; a cycle in it cuts the
/// polygon interior into pieces.
fn touches_form_cycle(rings: usize, mut incidences: Vec<(u64, u64, usize)>) -> bool {
    incidences.sort_unstable();
    incidences.dedup();
    let mut parent: Vec<usize> = (0..rings + incidences.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut point_node = rings;
    for (k, &(x, y, ring)) in incidences.iter().enumerate() {
        if k > 0 && (incidences[k - 1].0, incidences[k - 1].1) != (x, y) {
            point_node += 1;
        }
        let (a, b) = (find(&mut parent, ring), find(&mut parent, point_node));
        if a == b {
            return true;
        }
        parent[a] = b;
    }
    false
}

fn collinear_overlap_len(s: &Seg, t: &Seg) -> bool {
    let ax = s.axis();
    let key = |c: Coord| Axis::of(c, ax);
    let lo = key(s.p).min(key(s.q)).max(key(t.p).min(key(t.q)));
    let hi = key(s.p).max(key(s.q)).min(key(t.p).max(key(t.q)));
    lo < hi
}
