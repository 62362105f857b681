//! Shared-nothing multi-worker interlinking.
//!
//! The source-derived Equigrid partitions both datasets; its tiles are merged
//! into coarser macro tiles, the partitions. Partitions holding both sources
//! and targets become work units, dealt round-robin to the workers, and every
//! worker joins its units without touching shared mutable state. A pair is
//! joined only in the tile owning its reference point, so no pair is verified
//! twice across partitions.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::batch::{LinkSet, RunTimings};
use crate::error::{Error, Result};
use crate::geometry::{verify_pair, Geometry};
use crate::grid::{Grid, Tile, TileSpan};
use crate::progressive::{
    self, weights, ProgressiveAlgorithm, ProgressiveConfig, TraceStep, WeightContext, WeightedPair,
};

/// Equigrid tiles merged into one partition, per axis.
pub const DEFAULT_MACRO_GRID: (usize, usize) = (8, 8);

/// A macro tile with the ids of the geometries whose MBR reaches into it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub id: usize,
    /// Macro-tile coordinates.
    pub cell: (i64, i64),
    /// Equigrid tiles covered, clipped to the source extent.
    pub tiles: TileSpan,
    /// Ascending.
    pub source: Vec<u32>,
    pub target: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Partitioning {
    /// The Equigrid, sized by the mean source MBR.
    pub grid: Grid,
    pub macro_grid: (usize, usize),
    /// Nonempty partitions in row-major order of their macro tile; `id` is the position.
    pub partitions: Vec<Partition>,
}

/// A partition assigned to a worker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WorkUnit {
    pub partition: usize,
    pub worker: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParallelMode {
    Batch,
    /// Every unit runs the algorithm with its share of the budget.
    Progressive(ProgressiveConfig),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitStats {
    pub partition: usize,
    pub worker: usize,
    /// MBR-intersecting pairs owned by the unit.
    pub candidates: u64,
    pub verified: u64,
    /// Local budget in progressive mode.
    pub budget: Option<u64>,
}

/// Work imbalance across units, by candidate count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Skew {
    pub max_candidates: u64,
    pub min_candidates: u64,
}

#[derive(Clone, Debug)]
pub struct ParallelRun {
    pub links: LinkSet,
    pub timings: RunTimings,
    pub partitions: usize,
    pub units: Vec<UnitStats>,
    /// Candidate pairs over all units, |C|.
    pub candidates: u64,
    /// Progressive mode: the unit traces concatenated in partition order.
    pub trace: Vec<TraceStep>,
}

impl ParallelRun {
    pub fn skew(&self) -> Option<Skew> {
        let c = self.units.iter().map(|u| u.candidates);
        Some(Skew {
            max_candidates: c.clone().max()?,
            min_candidates: c.min()?,
        })
    }

    pub fn related_flags(&self) -> Vec<bool> {
        self.trace.iter().map(|s| s.related).collect()
    }
}

fn macro_span(span: &TileSpan, (nx, ny): (usize, usize)) -> TileSpan {
    let (nx, ny) = (nx as i64, ny as i64);
    TileSpan {
        x_lo: span.x_lo.div_euclid(nx),
        x_hi: span.x_hi.div_euclid(nx),
        y_lo: span.y_lo.div_euclid(ny),
        y_hi: span.y_hi.div_euclid(ny),
    }
}

/// Splits both datasets with the source-derived Equigrid merged `macro_grid`
/// tiles at a time. A geometry lands in every partition its MBR reaches;
/// targets outside the source extent land nowhere since they cannot pair.
pub fn partition_datasets(
    source: &[Geometry],
    target: &[Geometry],
    macro_grid: (usize, usize),
) -> Result<Partitioning> {
    if macro_grid.0 == 0 || macro_grid.1 == 0 {
        return Err(Error::Config("the macro grid needs at least one tile per axis".into()));
    }
    let grid = Grid::dynamic(source)?;
    let all = source[1..].iter().fold(*source[0].mbr(), |a, g| a.union(g.mbr()));
    let extent = grid.tiles_for(&all);
    let mut cells: FxHashMap<(i64, i64), (Vec<u32>, Vec<u32>)> = FxHashMap::default();
    for g in source {
        for c in macro_span(&grid.tiles_for(g.mbr()), macro_grid).iter() {
            cells.entry(c).or_default().0.push(g.id());
        }
    }
    for g in target {
        let Some(span) = grid.tiles_for(g.mbr()).intersection(&extent) else {
            continue;
        };
        for c in macro_span(&span, macro_grid).iter() {
            cells.entry(c).or_default().1.push(g.id());
        }
    }
    let mut keyed: Vec<_> = cells.into_iter().collect();
    keyed.sort_unstable_by_key(|(c, _)| (c.1, c.0));
    let (nx, ny) = (macro_grid.0 as i64, macro_grid.1 as i64);
    let partitions = keyed
        .into_iter()
        .enumerate()
        .map(|(id, (cell, (source, target)))| {
            let full = TileSpan {
                x_lo: cell.0 * nx,
                x_hi: cell.0 * nx + nx - 1,
                y_lo: cell.1 * ny,
                y_hi: cell.1 * ny + ny - 1,
            };
            Partition {
                id,
                cell,
                tiles: full.intersection(&extent).expect("partition inside the source extent"),
                source,
                target,
            }
        })
        .collect();
    Ok(Partitioning {
        grid,
        macro_grid,
        partitions,
    })
}

/// Partitions with both sources and targets, dealt round-robin to `workers`.
pub fn global_join(partitions: &[Partition], workers: usize) -> Vec<WorkUnit> {
    partitions
        .iter()
        .filter(|p| !p.source.is_empty() && !p.target.is_empty())
        .enumerate()
        .map(|(k, p)| WorkUnit {
            partition: p.id,
            worker: k % workers.max(1),
        })
        .collect()
}

/// Splits `budget` in proportion to `counts` by the largest-remainder method:
/// the shares sum to `budget` whenever some count is positive. Ties in the
/// remainder go to the earlier unit.
pub fn split_budget(counts: &[u64], budget: u64) -> Vec<u64> {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let exact: Vec<(u128, u128)> = counts
        .iter()
        .map(|&c| {
            let p = budget as u128 * c as u128;
            (p / total, p % total)
        })
        .collect();
    let mut shares: Vec<u64> = exact.iter().map(|&(q, _)| q as u64).collect();
    let left = budget - shares.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| exact[b].1.cmp(&exact[a].1).then(a.cmp(&b)));
    for &i in order.iter().take(left as usize) {
        shares[i] += 1;
    }
    shares
}

/// Runs `f` on every unit, each worker on its own thread taking its units in
/// order. Results come back in unit order; a panic becomes
/// [`Error::WorkerPanic`] naming the partition and stops that worker.
fn run_workers<T: Send>(
    units: &[WorkUnit],
    workers: usize,
    f: impl Fn(usize, &WorkUnit) -> Result<T> + Sync,
) -> Result<Vec<(T, Duration)>> {
    let f = &f;
    let mut done: Vec<(usize, Result<(T, Duration)>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for (i, u) in units.iter().enumerate().filter(|(_, u)| u.worker == w) {
                        let started = Instant::now();
                        let r = catch_unwind(AssertUnwindSafe(|| f(i, u)))
                            .unwrap_or(Err(Error::WorkerPanic {
                                partition: u.partition,
                            }))
                            .map(|v| (v, started.elapsed()));
                        let failed = r.is_err();
                        out.push((i, r));
                        if failed {
                            break;
                        }
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("unit panics are caught"))
            .collect()
    });
    done.sort_unstable_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, r)| r).collect()
}

/// Longest per-worker sum of unit durations.
fn busiest(units: &[WorkUnit], times: impl Iterator<Item = Duration>) -> Duration {
    let mut per: FxHashMap<usize, Duration> = FxHashMap::default();
    for (u, t) in units.iter().zip(times) {
        *per.entry(u.worker).or_default() += t;
    }
    per.into_values().max().unwrap_or_default()
}

/// The pairs a partition owns, with the Equigrid tile owning each, plus the
/// number of tiles holding a source.
fn owned_pairs(
    p: &Partition,
    grid: &Grid,
    source: &[Geometry],
    target: &[Geometry],
) -> (Vec<(u32, u32, Tile)>, u64) {
    let mut cells: FxHashMap<Tile, Vec<u32>> = FxHashMap::default();
    for &s in &p.source {
        if let Some(span) = grid.tiles_for(source[s as usize].mbr()).intersection(&p.tiles) {
            for tile in span.iter() {
                cells.entry(tile).or_default().push(s);
            }
        }
    }
    let mut pairs = Vec::new();
    for &t in &p.target {
        let tm = target[t as usize].mbr();
        let Some(span) = grid.tiles_for(tm).intersection(&p.tiles) else {
            continue;
        };
        for tile in span.iter() {
            let Some(cell) = cells.get(&tile) else {
                continue;
            };
            for &s in cell {
                let sm = source[s as usize].mbr();
                if sm.intersects(tm) && grid.reference_point_owner(sm, tm) == tile {
                    pairs.push((s, t, tile));
                }
            }
        }
    }
    (pairs, cells.len() as u64)
}

/// Interlinks on `workers` threads. Batch mode yields the serial LinkSet;
/// progressive mode runs the algorithm per unit with a proportional share of
/// the budget (shares left unused by a unit are not handed to others).
pub fn parallel_interlink(
    source: &[Geometry],
    target: &[Geometry],
    workers: usize,
    macro_grid: (usize, usize),
    mode: &ParallelMode,
) -> Result<ParallelRun> {
    if workers == 0 {
        return Err(Error::Config("at least one worker is needed".into()));
    }
    if let ParallelMode::Progressive(cfg) = mode {
        if cfg.budget == 0 {
            return Err(Error::Config("the budget must allow at least one verification".into()));
        }
    }
    let started = Instant::now();
    let part = partition_datasets(source, target, macro_grid)?;
    let units = global_join(&part.partitions, workers);
    let setup = started.elapsed();
    let grid = part.grid;
    let partition = |u: &WorkUnit| &part.partitions[u.partition];

    let (results, timings) = match mode {
        ParallelMode::Batch => {
            let out = run_workers(&units, workers, |_, u| {
                let started = Instant::now();
                let (pairs, _) = owned_pairs(partition(u), &grid, source, target);
                let filtering = started.elapsed();
                let mut links = LinkSet::new();
                for &(s, t, _) in &pairs {
                    links.record(s, t, verify_pair(&source[s as usize], &target[t as usize]))?;
                }
                Ok((pairs.len() as u64, links, Vec::new(), filtering))
            })?;
            let filtering = busiest(&units, out.iter().map(|((.., f), _)| *f));
            let total = busiest(&units, out.iter().map(|(_, d)| *d));
            let timings = RunTimings {
                filtering: setup + filtering,
                verification: total.saturating_sub(filtering),
            };
            let results = out
                .into_iter()
                .map(|((c, l, tr, _), _)| (c, l, tr, None))
                .collect::<Vec<_>>();
            (results, timings)
        }
        ParallelMode::Progressive(cfg) => {
            let found = run_workers(&units, workers, |_, u| {
                Ok(owned_pairs(partition(u), &grid, source, target))
            })?;
            let counts: Vec<u64> = found.iter().map(|((p, _), _)| p.len() as u64).collect();
            let budgets = split_budget(&counts, cfg.budget);
            let ctx = WeightContext {
                grid,
                tiles: found.iter().map(|((_, n), _)| n).sum(),
            };
            let filtering = setup + busiest(&units, found.iter().map(|(_, d)| *d));
            let found: Vec<_> = found.into_iter().map(|((p, _), _)| p).collect();
            let out = run_workers(&units, workers, |i, _| {
                let budget = budgets[i] as usize;
                let order = unit_schedule(&found[i], budget, cfg, &ctx, source, target);
                let (trace, links) = progressive::verify_schedule(&order, cfg.algorithm, source, target)?;
                Ok((trace, links))
            })?;
            let verification = busiest(&units, out.iter().map(|(_, d)| *d));
            let results = out
                .into_iter()
                .zip(counts.iter().zip(&budgets))
                .map(|(((tr, l), _), (&c, &b))| (c, l, tr, Some(b)))
                .collect();
            (
                results,
                RunTimings {
                    filtering,
                    verification,
                },
            )
        }
    };

    let mut links = LinkSet::new();
    let mut trace = Vec::new();
    let mut stats = Vec::with_capacity(units.len());
    let mut candidates = 0;
    for (u, (c, l, tr, budget)) in units.iter().zip(results) {
        stats.push(UnitStats {
            partition: u.partition,
            worker: u.worker,
            candidates: c,
            verified: l.verified(),
            budget,
        });
        candidates += c;
        links.merge(l);
        trace.extend(tr);
    }
    for (k, s) in trace.iter_mut().enumerate() {
        s.step = k as u64 + 1;
    }
    links.normalize();
    Ok(ParallelRun {
        links,
        timings,
        partitions: part.partitions.len(),
        units: stats,
        candidates,
        trace,
    })
}

/// Weighs and orders one unit's pairs and keeps `budget` of them.
fn unit_schedule(
    pairs: &[(u32, u32, Tile)],
    budget: usize,
    cfg: &ProgressiveConfig,
    ctx: &WeightContext,
    source: &[Geometry],
    target: &[Geometry],
) -> Vec<WeightedPair> {
    if budget == 0 {
        return Vec::new();
    }
    let weigh = |&(s, t, _): &(u32, u32, Tile)| {
        let (weight, tie) =
            weights::weigh(&cfg.weighting, &source[s as usize], &target[t as usize], ctx);
        WeightedPair {
            source: s,
            target: t,
            weight,
            tie,
        }
    };
    if cfg.algorithm == ProgressiveAlgorithm::PRadon {
        let mut tiles: BTreeMap<Tile, Vec<WeightedPair>> = BTreeMap::new();
        for p in pairs {
            tiles.entry(p.2).or_default().push(weigh(p));
        }
        let tiles = tiles.into_values().map(progressive::sorted).collect();
        let mut order = progressive::order_tiles(tiles, cfg.tile_order);
        order.truncate(budget);
        return order;
    }
    progressive::schedule(cfg.algorithm, pairs.iter().map(weigh).collect(), budget)
}
