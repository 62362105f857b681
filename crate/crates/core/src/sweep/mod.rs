//! Sort-based joins: Plane Sweep (List and Striped structures), PBSM and
//! Stripe Sweep (map and STR stripe storage).
//!
//! All of them emit every MBR-intersecting `(source, target)` pair exactly once.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Scratch, SourceIndex};
use crate::geometry::{Geometry, Mbr};
use crate::tree::StrTree;

pub const DEFAULT_PBSM_PARTITIONS: (usize, usize) = (64, 64);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepStructure {
    List,
    #[default]
    Striped,
}

impl FromStr for SweepStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "list" => Ok(SweepStructure::List),
            "striped" => Ok(SweepStructure::Striped),
            _ => Err(Error::Config(format!("unknown sweep structure `{s}` (list, striped)"))),
        }
    }
}

impl fmt::Display for SweepStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepStructure::List => "list",
            SweepStructure::Striped => "striped",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StripeStorage {
    #[default]
    Map,
    Str,
}

impl FromStr for StripeStorage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" => Ok(StripeStorage::Map),
            "str" => Ok(StripeStorage::Str),
            _ => Err(Error::Config(format!("unknown stripe storage `{s}` (map, str)"))),
        }
    }
}

impl fmt::Display for StripeStorage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StripeStorage::Map => "map",
            StripeStorage::Str => "str",
        })
    }
}

/// Parses `NxM` (also `N×M`), both positive.
pub fn parse_partitions(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("expected NxM with positive N and M, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X', '×']).ok_or_else(bad)?;
    let n: usize = a.trim().parse().map_err(|_| bad())?;
    let m: usize = b.trim().parse().map_err(|_| bad())?;
    if n == 0 || m == 0 {
        return Err(bad());
    }
    Ok((n, m))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    /// Largest number of simultaneously active geometries (both datasets)
    /// in any single sweep.
    pub peak_active: usize,
}

/// Ids sorted by `(x_min, id)`.
fn x_order(mbrs: &[Mbr]) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..mbrs.len() as u32).collect();
    ids.sort_unstable_by(|&a, &b| {
        mbrs[a as usize]
            .x_min
            .total_cmp(&mbrs[b as usize].x_min)
            .then(a.cmp(&b))
    });
    ids
}

#[inline]
fn y_overlap(a: &Mbr, b: &Mbr) -> bool {
    a.y_min <= b.y_max && b.y_min <= a.y_max
}

/// List Sweep over pre-sorted id lists: one active list per dataset.
///
/// Events are merged by `x_min`, source first on ties. A new geometry is
/// paired with the still-active geometries of the other dataset.
fn list_sweep(
    s: &[Mbr],
    t: &[Mbr],
    s_ids: &[u32],
    t_ids: &[u32],
    accept: &dyn Fn(&Mbr, &Mbr) -> bool,
    emit: &mut dyn FnMut(u32, u32),
) -> usize {
    let (mut act_s, mut act_t): (Vec<u32>, Vec<u32>) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    let mut peak = 0;
    while i < s_ids.len() || j < t_ids.len() {
        let take_source = j == t_ids.len()
            || (i < s_ids.len() && s[s_ids[i] as usize].x_min <= t[t_ids[j] as usize].x_min);
        let x = if take_source {
            s[s_ids[i] as usize].x_min
        } else {
            t[t_ids[j] as usize].x_min
        };
        act_s.retain(|&a| s[a as usize].x_max >= x);
        act_t.retain(|&b| t[b as usize].x_max >= x);
        if take_source {
            let a = s_ids[i];
            let am = &s[a as usize];
            for &b in &act_t {
                let bm = &t[b as usize];
                if y_overlap(am, bm) && accept(am, bm) {
                    emit(a, b);
                }
            }
            act_s.push(a);
            i += 1;
        } else {
            let b = t_ids[j];
            let bm = &t[b as usize];
            for &a in &act_s {
                let am = &s[a as usize];
                if y_overlap(am, bm) && accept(am, bm) {
                    emit(a, b);
                }
            }
            act_t.push(b);
            j += 1;
        }
        peak = peak.max(act_s.len() + act_t.len());
    }
    peak
}

/// `n` equal cells over `[lo, hi]`; out-of-range values clamp to the ends.
#[derive(Clone, Copy, Debug)]
struct Axis {
    lo: f64,
    step: f64,
    n: usize,
}

impl Axis {
    fn new(lo: f64, hi: f64, n: usize) -> Axis {
        Axis {
            lo,
            step: (hi - lo) / n as f64,
            n,
        }
    }

    #[inline]
    fn cell(&self, v: f64) -> usize {
        if !(self.step > 0.0) {
            return 0;
        }
        let k = ((v - self.lo) / self.step).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n - 1)
        }
    }
}

fn extent(mbrs: impl Iterator<Item = Mbr>) -> Option<Mbr> {
    mbrs.reduce(|a, b| a.union(&b))
}

fn mbrs_of(g: &[Geometry]) -> Vec<Mbr> {
    g.iter().map(|g| *g.mbr()).collect()
}

/// Plane Sweep join.
pub fn plane_sweep(
    source: &[Geometry],
    target: &[Geometry],
    structure: SweepStructure,
    emit: &mut dyn FnMut(u32, u32),
) -> Result<SweepStats> {
    if source.is_empty() {
        return Err(Error::EmptyDataset("source"));
    }
    let (s, t) = (mbrs_of(source), mbrs_of(target));
    let (s_ids, t_ids) = (x_order(&s), x_order(&t));
    let peak_active = match structure {
        SweepStructure::List => list_sweep(&s, &t, &s_ids, &t_ids, &|_, _| true, emit),
        SweepStructure::Striped => striped_sweep(&s, &t, &s_ids, &t_ids, emit),
    };
    Ok(SweepStats { peak_active })
}

/// Number of horizontal bands for the Striped structure.
///
/// Band height follows the mean source MBR height (width when all sources
/// are flat); the count is clamped to `[1, 4·|S|]`.
pub fn stripe_count(s: &[Mbr], span: f64) -> usize {
    let n = s.len() as f64;
    let mut h = s.iter().map(Mbr::height).sum::<f64>() / n;
    if !(h > 0.0) {
        h = s.iter().map(Mbr::width).sum::<f64>() / n;
    }
    if !(h > 0.0 && span > 0.0) {
        return 1;
    }
    ((span / h).ceil() as usize).clamp(1, 4 * s.len())
}

/// Striped Sweep: the plane is cut into horizontal bands, each with its own
/// List Sweep. A pair is reported by the band holding the lower of the two
/// upper edges.
fn striped_sweep(
    s: &[Mbr],
    t: &[Mbr],
    s_ids: &[u32],
    t_ids: &[u32],
    emit: &mut dyn FnMut(u32, u32),
) -> usize {
    let all = extent(s.iter().chain(t).copied()).expect("nonempty source");
    let axis = Axis::new(all.y_min, all.y_max, stripe_count(s, all.height()));
    let mut bands: Vec<(Vec<u32>, Vec<u32>)> = vec![Default::default(); axis.n];
    for &a in s_ids {
        let m = &s[a as usize];
        for band in &mut bands[axis.cell(m.y_min)..=axis.cell(m.y_max)] {
            band.0.push(a);
        }
    }
    for &b in t_ids {
        let m = &t[b as usize];
        for band in &mut bands[axis.cell(m.y_min)..=axis.cell(m.y_max)] {
            band.1.push(b);
        }
    }
    let mut peak = 0;
    for (k, (bs, bt)) in bands.iter().enumerate() {
        if bs.is_empty() || bt.is_empty() {
            continue;
        }
        let owns = |a: &Mbr, b: &Mbr| axis.cell(a.y_max.min(b.y_max)) == k;
        peak = peak.max(list_sweep(s, t, bs, bt, &owns, emit));
    }
    peak
}

/// PBSM: an `n_x × n_y` partition grid over the joint extent, a List Sweep
/// inside each partition, and reference-point deduplication across them.
pub fn pbsm(
    source: &[Geometry],
    target: &[Geometry],
    (nx, ny): (usize, usize),
    emit: &mut dyn FnMut(u32, u32),
) -> Result<SweepStats> {
    if source.is_empty() {
        return Err(Error::EmptyDataset("source"));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::Config("PBSM needs at least one partition per axis".into()));
    }
    let (s, t) = (mbrs_of(source), mbrs_of(target));
    let all = extent(s.iter().chain(&t).copied()).expect("nonempty source");
    let (ax, ay) = (Axis::new(all.x_min, all.x_max, nx), Axis::new(all.y_min, all.y_max, ny));
    let mut parts: FxHashMap<(usize, usize), (Vec<u32>, Vec<u32>)> = FxHashMap::default();
    let mut scatter = |mbrs: &[Mbr], ids: &[u32], target_side: bool| {
        for &id in ids {
            let m = &mbrs[id as usize];
            for i in ax.cell(m.x_min)..=ax.cell(m.x_max) {
                for j in ay.cell(m.y_min)..=ay.cell(m.y_max) {
                    let p = parts.entry((i, j)).or_default();
                    if target_side { &mut p.1 } else { &mut p.0 }.push(id);
                }
            }
        }
    };
    scatter(&s, &x_order(&s), false);
    scatter(&t, &x_order(&t), true);
    let mut keys: Vec<(usize, usize)> = parts.keys().copied().collect();
    keys.sort_unstable();
    let mut peak = 0;
    for key in keys {
        let (ps, pt) = &parts[&key];
        if ps.is_empty() || pt.is_empty() {
            continue;
        }
        let owns = |a: &Mbr, b: &Mbr| {
            (ax.cell(a.x_min.max(b.x_min)), ay.cell(a.y_max.min(b.y_max))) == key
        };
        peak = peak.max(list_sweep(&s, &t, ps, pt, &owns, emit));
    }
    Ok(SweepStats { peak_active: peak })
}

#[derive(Clone, Debug)]
enum Stripes {
    Map(FxHashMap<i64, Vec<u32>>),
    Str(FxHashMap<i64, StrTree>),
}

/// Stripe Sweep's source index: vertical stripes of the mean source width.
#[derive(Clone, Debug)]
pub struct StripeIndex {
    width: f64,
    /// Range of occupied stripe numbers.
    lo: i64,
    hi: i64,
    stripes: Stripes,
    mbrs: Vec<Mbr>,
}

/// Builds the stripes over the source. A zero mean width falls back to 1.
pub fn stripe_sweep_build(source: &[Geometry], storage: StripeStorage) -> Result<StripeIndex> {
    if source.is_empty() {
        return Err(Error::EmptyDataset("source"));
    }
    let mbrs = mbrs_of(source);
    let mut width = mbrs.iter().map(Mbr::width).sum::<f64>() / mbrs.len() as f64;
    if !(width > 0.0 && width.is_finite()) {
        width = 1.0;
    }
    let stripe = |x: f64| (x / width).floor() as i64;
    let mut map: FxHashMap<i64, Vec<u32>> = FxHashMap::default();
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for (id, m) in mbrs.iter().enumerate() {
        let (a, b) = (stripe(m.x_min), stripe(m.x_max));
        lo = lo.min(a);
        hi = hi.max(b);
        for k in a..=b {
            map.entry(k).or_default().push(id as u32);
        }
    }
    let stripes = match storage {
        StripeStorage::Map => Stripes::Map(map),
        StripeStorage::Str => Stripes::Str(
            map.into_iter()
                .map(|(k, ids)| {
                    let entries = ids.into_iter().map(|i| (mbrs[i as usize], i)).collect();
                    (k, StrTree::build(entries, crate::tree::DEFAULT_NODE_CAPACITY))
                })
                .collect(),
        ),
    };
    Ok(StripeIndex {
        width,
        lo,
        hi,
        stripes,
        mbrs,
    })
}

impl StripeIndex {
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Source ids stored in stripe `k`, sorted.
    pub fn stripe(&self, k: i64) -> Vec<u32> {
        let mut ids = match &self.stripes {
            Stripes::Map(m) => m.get(&k).cloned().unwrap_or_default(),
            Stripes::Str(m) => m.get(&k).map_or_else(Vec::new, |tree| {
                let mut v = Vec::new();
                tree.query(&Mbr::new(f64::MIN, f64::MIN, f64::MAX, f64::MAX), |i| v.push(i));
                v
            }),
        };
        ids.sort_unstable();
        ids
    }

    /// Distinct sources sharing a stripe with `t` whose MBR intersects it.
    pub fn probe(&self, t: &Mbr, scratch: &mut Scratch, out: &mut Vec<u32>) {
        let a = ((t.x_min / self.width).floor() as i64).max(self.lo);
        let b = ((t.x_max / self.width).floor() as i64).min(self.hi);
        if a > b {
            return;
        }
        scratch.next_probe();
        for k in a..=b {
            match &self.stripes {
                Stripes::Map(m) => {
                    for &id in m.get(&k).map_or(&[][..], Vec::as_slice) {
                        if scratch.first_visit(id) && self.mbrs[id as usize].intersects(t) {
                            out.push(id);
                        }
                    }
                }
                Stripes::Str(m) => {
                    if let Some(tree) = m.get(&k) {
                        tree.query(t, |id| {
                            if scratch.first_visit(id) {
                                out.push(id);
                            }
                        });
                    }
                }
            }
        }
    }
}

impl SourceIndex for StripeIndex {
    fn candidates(&self, t: &Mbr, scratch: &mut Scratch, out: &mut Vec<u32>) {
        self.probe(t, scratch, out);
    }

    fn heap_bytes(&self) -> usize {
        let stripes = match &self.stripes {
            Stripes::Map(m) => {
                m.capacity() * std::mem::size_of::<(i64, Vec<u32>)>()
                    + m.values().map(|v| v.capacity() * 4).sum::<usize>()
            }
            Stripes::Str(m) => {
                m.capacity() * std::mem::size_of::<(i64, StrTree)>()
                    + m.values().map(StrTree::heap_bytes).sum::<usize>()
            }
        };
        stripes + self.mbrs.capacity() * std::mem::size_of::<Mbr>()
    }
}

/// Stripe Sweep with both datasets in memory: probes every target in order.
pub fn stripe_sweep(
    source: &[Geometry],
    target: &[Geometry],
    storage: StripeStorage,
    emit: &mut dyn FnMut(u32, u32),
) -> Result<StripeIndex> {
    let index = stripe_sweep_build(source, storage)?;
    let mut scratch = Scratch::new(source.len());
    let mut buf = Vec::new();
    for g in target {
        buf.clear();
        index.probe(g.mbr(), &mut scratch, &mut buf);
        for &s in &buf {
            emit(s, g.id());
        }
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Coord;

    fn rect(id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
        let c = |x, y| Coord::new(x, y);
        Geometry::polygon(id, vec![c(x0, y0), c(x1, y0), c(x1, y1), c(x0, y1), c(x0, y0)], vec![])
            .unwrap()
    }

    fn seg(id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
        Geometry::line_string(id, vec![Coord::new(x0, y0), Coord::new(x1, y1)]).unwrap()
    }

    fn fixture() -> (Vec<Geometry>, Vec<Geometry>) {
        (
            vec![rect(0, 0., 0., 10., 10.), rect(1, 2., 2., 4., 4.)],
            vec![seg(0, 10., 5., 15., 5.), seg(1, 12., 0., 12., 8.)],
        )
    }

    fn collect(f: impl FnOnce(&mut dyn FnMut(u32, u32))) -> Vec<(u32, u32)> {
        let mut v = Vec::new();
        f(&mut |a, b| v.push((a, b)));
        v.sort_unstable();
        v
    }

    #[test]
    fn fixture_pairs() {
        let (s, t) = fixture();
        for st in [SweepStructure::List, SweepStructure::Striped] {
            assert_eq!(collect(|e| drop(plane_sweep(&s, &t, st, e))), vec![(0, 0)]);
        }
        for p in [(1, 1), (4, 4), (64, 64)] {
            assert_eq!(collect(|e| drop(pbsm(&s, &t, p, e))), vec![(0, 0)]);
        }
        for st in [StripeStorage::Map, StripeStorage::Str] {
            assert_eq!(collect(|e| drop(stripe_sweep(&s, &t, st, e))), vec![(0, 0)]);
        }
    }

    #[test]
    fn stripes_follow_mean_width() {
        let (s, t) = fixture();
        for st in [StripeStorage::Map, StripeStorage::Str] {
            let idx = stripe_sweep_build(&s, st).unwrap();
            assert_eq!(idx.width(), 6.0);
            assert_eq!(idx.stripe(0), vec![0, 1]);
            assert_eq!(idx.stripe(1), vec![0]);
            assert!(idx.stripe(2).is_empty());
            let mut out = Vec::new();
            idx.probe(t[0].mbr(), &mut Scratch::default(), &mut out);
            assert_eq!(out, vec![0]);
            out.clear();
            idx.probe(&Mbr::new(-50., 0., -40., 1.), &mut Scratch::default(), &mut out);
            assert!(out.is_empty());
        }
        let points = vec![seg(0, 3., 0., 3., 9.)];
        assert_eq!(stripe_sweep_build(&points, StripeStorage::Map).unwrap().width(), 1.0);
    }

    #[test]
    fn spanning_geometry_is_emitted_once() {
        let s = vec![rect(0, 0., 0., 100., 100.)];
        let t: Vec<Geometry> = (0..10).map(|i| rect(i, i as f64 * 10., 0., i as f64 * 10. + 5., 100.)).collect();
        let got = collect(|e| drop(pbsm(&s, &t, (8, 8), e)));
        assert_eq!(got, (0..10).map(|i| (0, i)).collect::<Vec<_>>());
    }

    #[test]
    fn x_disjoint_is_empty() {
        let s = vec![rect(0, 0., 0., 1., 1.)];
        let t = vec![rect(0, 5., 0., 6., 1.)];
        assert!(collect(|e| drop(plane_sweep(&s, &t, SweepStructure::List, e))).is_empty());
        assert!(matches!(
            plane_sweep(&[], &t, SweepStructure::List, &mut |_, _| {}),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn partitions_parse() {
        assert_eq!(parse_partitions("64x32").unwrap(), (64, 32));
        assert!(parse_partitions("0x3").is_err());
        assert!(parse_partitions("7").is_err());
    }
}
