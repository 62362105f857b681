//! Budget-aware interlinking: Filtering → Scheduling → Verification with at
//! most `budget` verifications, most promising pairs first.

pub mod metrics;
pub mod weights;

pub use metrics::{compute_metrics, Metrics};
pub use weights::{MbroNorm, Scheme, WeightContext, Weighting};

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::batch::{LinkSet, RunTimings};
use crate::error::{Error, Result};
use crate::filter::{Scratch, SourceIndex};
use crate::geometry::{verify_pair, Geometry};
use crate::grid::{build_index, for_tile_pairs, Grid, IndexMode, SourceGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgressiveAlgorithm {
    /// Progressive GIA.nt: the top-`budget` pairs by weight.
    Pg,
    /// Dynamic Progressive GIA.nt: boosts pairs next to detected links.
    Dpg,
    /// Local Progressive GIA.nt: a quota of best pairs per target.
    Lpg,
    /// Geometry-ordered GIA.nt: pairs of the best geometries first.
    Gog,
    /// Iterative Progressive GIA.nt: round-robin over ranked geometries.
    Ipg,
    /// Progressive RADON: tile by tile.
    #[serde(rename = "pradon")]
    PRadon,
}

impl ProgressiveAlgorithm {
    pub const ALL: [ProgressiveAlgorithm; 6] = [
        ProgressiveAlgorithm::Pg,
        ProgressiveAlgorithm::Dpg,
        ProgressiveAlgorithm::Lpg,
        ProgressiveAlgorithm::Gog,
        ProgressiveAlgorithm::Ipg,
        ProgressiveAlgorithm::PRadon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProgressiveAlgorithm::Pg => "pg",
            ProgressiveAlgorithm::Dpg => "dpg",
            ProgressiveAlgorithm::Lpg => "lpg",
            ProgressiveAlgorithm::Gog => "gog",
            ProgressiveAlgorithm::Ipg => "ipg",
            ProgressiveAlgorithm::PRadon => "pradon",
        }
    }
}

impl fmt::Display for ProgressiveAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProgressiveAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProgressiveAlgorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown progressive algorithm `{s}` (pg, dpg, lpg, gog, ipg, pradon)"
                ))
            })
    }
}

/// Order in which Progressive RADON visits tiles, by candidate count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileOrder {
    Increasing,
    #[default]
    Decreasing,
}

impl FromStr for TileOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inc" | "increasing" => Ok(TileOrder::Increasing),
            "dec" | "decreasing" => Ok(TileOrder::Decreasing),
            _ => Err(Error::Config(format!("unknown tile order `{s}` (inc, dec)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveConfig {
    pub algorithm: ProgressiveAlgorithm,
    pub weighting: Weighting,
    /// Maximum number of verifications.
    pub budget: u64,
    pub tile_order: TileOrder,
}

impl ProgressiveConfig {
    pub fn new(algorithm: ProgressiveAlgorithm, scheme: Scheme, budget: u64) -> Self {
        ProgressiveConfig {
            algorithm,
            weighting: Weighting::atomic(scheme),
            budget,
            tile_order: TileOrder::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedPair {
    pub source: u32,
    pub target: u32,
    pub weight: f64,
    /// Secondary weight of a composite scheme, 0 otherwise.
    pub tie: f64,
}

/// Scheduling order: weight and tie-break weight descending, then source and
/// target id ascending. `Less` ranks first.
pub fn rank(a: &WeightedPair, b: &WeightedPair) -> Ordering {
    b.weight
        .total_cmp(&a.weight)
        .then(b.tie.total_cmp(&a.tie))
        .then(a.source.cmp(&b.source))
        .then(a.target.cmp(&b.target))
}

/// A pair ordered by [`rank`]; the greatest element ranks last.
#[derive(Clone, Copy, Debug)]
struct Ranked(WeightedPair);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        rank(&self.0, &other.0) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        rank(&self.0, &other.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    /// 1-based verification number.
    pub step: u64,
    pub source: u32,
    pub target: u32,
    pub related: bool,
}

#[derive(Clone, Debug)]
pub struct ProgressiveRun {
    pub trace: Vec<TraceStep>,
    pub links: LinkSet,
    /// Candidate pairs found by filtering, |C|.
    pub candidates: u64,
    pub timings: RunTimings,
}

impl ProgressiveRun {
    pub fn related_flags(&self) -> Vec<bool> {
        self.trace.iter().map(|s| s.related).collect()
    }

    pub fn metrics(&self, total_related: u64, budget: u64) -> Metrics {
        compute_metrics(&self.related_flags(), total_related, budget)
    }
}

/// Writes the trace as TSV: `step, source, target, related (0/1)`.
pub fn write_trace(trace: &[TraceStep], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "step\tsource\ttarget\trelated")?;
        for s in trace {
            writeln!(out, "{}\t{}\t{}\t{}", s.step, s.source, s.target, s.related as u8)?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Weighted GIA.nt candidates: a grid over the source, probed by every
/// target in order.
pub fn weighted_candidates(
    source: &[Geometry],
    target: &[Geometry],
    weighting: &Weighting,
    mut f: impl FnMut(WeightedPair),
) -> Result<()> {
    let index = SourceGrid::build(source, Grid::dynamic(source)?)?;
    let ctx = WeightContext {
        grid: index.grid,
        tiles: index.nonempty_tiles() as u64,
    };
    let mut scratch = Scratch::new(source.len());
    let mut buf = Vec::new();
    for t in target {
        buf.clear();
        index.candidates(t.mbr(), &mut scratch, &mut buf);
        for &s in &buf {
            let (weight, tie) = weights::weigh(weighting, &source[s as usize], t, &ctx);
            f(WeightedPair {
                source: s,
                target: t.id(),
                weight,
                tie,
            });
        }
    }
    Ok(())
}

/// Runs a budget-aware algorithm over in-memory datasets.
pub fn run_progressive(
    source: &[Geometry],
    target: &[Geometry],
    cfg: &ProgressiveConfig,
) -> Result<ProgressiveRun> {
    if cfg.budget == 0 {
        return Err(Error::Config("the budget must allow at least one verification".into()));
    }
    if source.is_empty() {
        return Err(Error::EmptyDataset("source"));
    }
    let started = Instant::now();
    let budget = cfg.budget as usize;
    let w = &cfg.weighting;
    let mut candidates = 0u64;
    let mut order = match cfg.algorithm {
        ProgressiveAlgorithm::Pg | ProgressiveAlgorithm::Dpg => {
            let mut heap = BinaryHeap::with_capacity(budget.min(1 << 20));
            weighted_candidates(source, target, w, |p| {
                candidates += 1;
                heap.push(Ranked(p));
                if heap.len() > budget {
                    heap.pop();
                }
            })?;
            heap.into_sorted_vec().into_iter().map(|r| r.0).collect()
        }
        ProgressiveAlgorithm::PRadon => {
            let pairs = radon_schedule(source, target, w, cfg.tile_order)?;
            candidates = pairs.len() as u64;
            pairs
        }
        other => {
            let mut all = Vec::new();
            weighted_candidates(source, target, w, |p| all.push(p))?;
            candidates = all.len() as u64;
            schedule(other, all, budget)
        }
    };
    let filtering = started.elapsed();
    let started = Instant::now();
    order.truncate(budget);
    let (trace, links) = verify_schedule(&order, cfg.algorithm, source, target)?;
    Ok(ProgressiveRun {
        trace,
        links,
        candidates,
        timings: RunTimings {
            filtering,
            verification: started.elapsed(),
        },
    })
}

/// Orders the candidate pairs of a GIA.nt-based algorithm (everything but
/// Progressive RADON) and keeps at most `budget` of them.
pub(crate) fn schedule(
    algorithm: ProgressiveAlgorithm,
    all: Vec<WeightedPair>,
    budget: usize,
) -> Vec<WeightedPair> {
    match algorithm {
        ProgressiveAlgorithm::Lpg => local_schedule(all, budget),
        ProgressiveAlgorithm::Gog => geometry_ordered(all, budget),
        ProgressiveAlgorithm::Ipg => iterative(all, budget),
        _ => {
            let mut v = sorted(all);
            v.truncate(budget);
            v
        }
    }
}

/// Verifies a schedule in order (re-ranking on the fly for the dynamic algorithm).
pub(crate) fn verify_schedule(
    order: &[WeightedPair],
    algorithm: ProgressiveAlgorithm,
    source: &[Geometry],
    target: &[Geometry],
) -> Result<(Vec<TraceStep>, LinkSet)> {
    if algorithm == ProgressiveAlgorithm::Dpg {
        return run_dynamic(order, source, target);
    }
    let mut v = Verifier::new(source, target);
    for p in order {
        v.verify(p.source, p.target)?;
    }
    Ok((v.trace, v.links))
}

/// Concatenates per-tile pair lists (each already ranked) in tile order.
pub(crate) fn order_tiles(mut tiles: Vec<Vec<WeightedPair>>, order: TileOrder) -> Vec<WeightedPair> {
    // stable sort keeps row-major order among equal counts
    match order {
        TileOrder::Increasing => tiles.sort_by_key(|p| p.len()),
        TileOrder::Decreasing => tiles.sort_by_key(|p| std::cmp::Reverse(p.len())),
    }
    tiles.into_iter().flatten().collect()
}

struct Verifier<'a> {
    source: &'a [Geometry],
    target: &'a [Geometry],
    trace: Vec<TraceStep>,
    links: LinkSet,
}

impl<'a> Verifier<'a> {
    fn new(source: &'a [Geometry], target: &'a [Geometry]) -> Self {
        Verifier {
            source,
            target,
            trace: Vec::new(),
            links: LinkSet::new(),
        }
    }

    fn verify(&mut self, s: u32, t: u32) -> Result<bool> {
        let before = self.links.related();
        self.links
            .record(s, t, verify_pair(&self.source[s as usize], &self.target[t as usize]))?;
        let related = self.links.related() > before;
        self.trace.push(TraceStep {
            step: self.trace.len() as u64 + 1,
            source: s,
            target: t,
            related,
        });
        Ok(related)
    }
}

pub(crate) fn sorted(mut v: Vec<WeightedPair>) -> Vec<WeightedPair> {
    v.sort_unstable_by(rank);
    v
}

/// Dynamic processing: after every related pair, the pending pairs sharing
/// its source or target get `base × (1 + deg(s) + deg(t))`, where the degrees
/// count related pairs found so far per geometry.
fn run_dynamic(
    schedule: &[WeightedPair],
    source: &[Geometry],
    target: &[Geometry],
) -> Result<(Vec<TraceStep>, LinkSet)> {
    let mut by_source: FxHashMap<u32, Vec<usize>> = FxHashMap::default();
    let mut by_target: FxHashMap<u32, Vec<usize>> = FxHashMap::default();
    for (i, p) in schedule.iter().enumerate() {
        by_source.entry(p.source).or_default().push(i);
        by_target.entry(p.target).or_default().push(i);
    }
    let mut current = schedule.to_vec();
    let mut pending: BTreeSet<(Ranked, usize)> =
        current.iter().enumerate().map(|(i, p)| (Ranked(*p), i)).collect();
    let mut done = vec![false; schedule.len()];
    let mut deg_s: FxHashMap<u32, u32> = FxHashMap::default();
    let mut deg_t: FxHashMap<u32, u32> = FxHashMap::default();
    let mut v = Verifier::new(source, target);
    while let Some((Ranked(p), i)) = pending.pop_first() {
        done[i] = true;
        if !v.verify(p.source, p.target)? {
            continue;
        }
        *deg_s.entry(p.source).or_default() += 1;
        *deg_t.entry(p.target).or_default() += 1;
        let near = by_source[&p.source].iter().chain(&by_target[&p.target]);
        for &j in near {
            if done[j] {
                continue;
            }
            let q = &mut current[j];
            pending.remove(&(Ranked(*q), j));
            let boost = 1 + deg_s.get(&q.source).copied().unwrap_or(0) + deg_t.get(&q.target).copied().unwrap_or(0);
            q.weight = schedule[j].weight * boost as f64;
            pending.insert((Ranked(*q), j));
        }
    }
    Ok((v.trace, v.links))
}

/// Local scheduling: each target keeps its best `max(1, budget / |T'|)`
/// pairs, where `T'` are the targets with candidates. Budget left unused by
/// targets with fewer pairs goes to the best pairs beyond the quotas.
fn local_schedule(all: Vec<WeightedPair>, budget: usize) -> Vec<WeightedPair> {
    let mut per_target: FxHashMap<u32, Vec<WeightedPair>> = FxHashMap::default();
    for p in all {
        per_target.entry(p.target).or_default().push(p);
    }
    if per_target.is_empty() {
        return Vec::new();
    }
    let quota = (budget / per_target.len()).max(1);
    let (mut kept, mut overflow) = (Vec::new(), Vec::new());
    for (_, pairs) in per_target {
        let mut pairs = sorted(pairs);
        let rest = pairs.split_off(quota.min(pairs.len()));
        kept.extend(pairs);
        overflow.extend(rest);
    }
    let mut kept = sorted(kept);
    kept.truncate(budget);
    if kept.len() < budget {
        let mut overflow = sorted(overflow);
        overflow.truncate(budget - kept.len());
        kept.extend(overflow);
    }
    sorted(kept)
}

/// A source or target geometry in a ranking; sources sort first on ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Side {
    Source(u32),
    Target(u32),
}

/// Geometries with their pair indices (best pair first), ranked by average
/// pair weight, descending.
fn rank_geometries(all: &[WeightedPair]) -> Vec<(Side, Vec<usize>)> {
    let mut groups: FxHashMap<Side, Vec<usize>> = FxHashMap::default();
    for (i, p) in all.iter().enumerate() {
        groups.entry(Side::Source(p.source)).or_default().push(i);
        groups.entry(Side::Target(p.target)).or_default().push(i);
    }
    let mut ranked: Vec<(f64, Side, Vec<usize>)> = groups
        .into_iter()
        .map(|(side, mut idx)| {
            idx.sort_unstable_by(|&a, &b| rank(&all[a], &all[b]));
            let avg = idx.iter().map(|&i| all[i].weight).sum::<f64>() / idx.len() as f64;
            (avg, side, idx)
        })
        .collect();
    ranked.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, s, i)| (s, i)).collect()
}

/// Geometry-ordered scheduling: harvest pairs down the geometry ranking until
/// the budget is full, then sort them by weight.
fn geometry_ordered(all: Vec<WeightedPair>, budget: usize) -> Vec<WeightedPair> {
    let mut taken = vec![false; all.len()];
    let mut out = Vec::new();
    'harvest: for (_, idx) in rank_geometries(&all) {
        for i in idx {
            if out.len() == budget {
                break 'harvest;
            }
            if !std::mem::replace(&mut taken[i], true) {
                out.push(all[i]);
            }
        }
    }
    sorted(out)
}

/// Iterative scheduling: round-robin over the ranked geometries, each turn
/// taking the geometry's best pair not examined yet.
fn iterative(all: Vec<WeightedPair>, budget: usize) -> Vec<WeightedPair> {
    let mut taken = vec![false; all.len()];
    let mut queues: Vec<std::vec::IntoIter<usize>> =
        rank_geometries(&all).into_iter().map(|(_, idx)| idx.into_iter()).collect();
    let mut out = Vec::new();
    while out.len() < budget && !queues.is_empty() {
        queues.retain_mut(|q| {
            if out.len() == budget {
                return true;
            }
            match q.find(|&i| !taken[i]) {
                Some(i) => {
                    taken[i] = true;
                    out.push(all[i]);
                    true
                }
                None => false,
            }
        });
    }
    out
}

/// Progressive RADON: one grid over both datasets; tiles visited by their
/// number of owned candidate pairs, each tile's pairs by weight.
fn radon_schedule(
    source: &[Geometry],
    target: &[Geometry],
    w: &Weighting,
    order: TileOrder,
) -> Result<Vec<WeightedPair>> {
    let grid = Grid::dynamic(source.iter().chain(target))?;
    let index = build_index(source, target, grid, IndexMode::BothDatasets)?;
    let ctx = WeightContext {
        grid,
        tiles: index.nonempty_tiles() as u64,
    };
    let mut tiles = Vec::new();
    for tile in index.sorted_tiles() {
        let cell = index.cell(tile).expect("listed tile");
        let mut pairs = Vec::new();
        for_tile_pairs(&grid, tile, cell, source, target, &mut |s, t| {
            let (weight, tie) = weights::weigh(w, &source[s as usize], &target[t as usize], &ctx);
            pairs.push(WeightedPair {
                source: s,
                target: t,
                weight,
                tie,
            });
        });
        if !pairs.is_empty() {
            tiles.push(sorted(pairs));
        }
    }
    Ok(order_tiles(tiles, order))
}
