//! The budget-agnostic Filtering → Verification pipeline.
//!
//! Memory-intensive algorithms load both datasets and enumerate candidate
//! pairs up front. Memory-frugal algorithms index the smaller dataset only and
//! stream the other one past the index.

mod links;

pub use links::{Link, LinkSet, Report, RunTimings};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Scratch, SourceIndex};
use crate::geometry::{verify_pair, Geometry, RelationSet};
use crate::grid::{radon_join, Grid, GridMode, SourceGrid};
use crate::io::{stream_target, DatasetDescriptor, GeometryProfile, LinkTriple, SkipReport};
use crate::sweep::{self, StripeStorage, SweepStructure};
use crate::tree::{self, Quantizer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Radon,
    StaticRadon,
    Giant,
    StaticGiant,
    PlaneSweep,
    Pbsm,
    StripeSweep,
    #[serde(rename = "rtree")]
    RTree,
    Quadtree,
    #[serde(rename = "crtree")]
    CrTree,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Radon,
        Algorithm::StaticRadon,
        Algorithm::Giant,
        Algorithm::StaticGiant,
        Algorithm::PlaneSweep,
        Algorithm::Pbsm,
        Algorithm::StripeSweep,
        Algorithm::RTree,
        Algorithm::Quadtree,
        Algorithm::CrTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Radon => "radon",
            Algorithm::StaticRadon => "static-radon",
            Algorithm::Giant => "giant",
            Algorithm::StaticGiant => "static-giant",
            Algorithm::PlaneSweep => "plane-sweep",
            Algorithm::Pbsm => "pbsm",
            Algorithm::StripeSweep => "stripe-sweep",
            Algorithm::RTree => "rtree",
            Algorithm::Quadtree => "quadtree",
            Algorithm::CrTree => "crtree",
        }
    }

    /// Keeps both datasets in memory (no streaming, no swap).
    pub fn is_memory_intensive(self) -> bool {
        matches!(
            self,
            Algorithm::Radon | Algorithm::StaticRadon | Algorithm::PlaneSweep | Algorithm::Pbsm
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::Config(format!("unknown algorithm `{s}` ({})", names.join(", ")))
            })
    }
}

/// Tunables of the batch algorithms; each algorithm reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Tile size of the static grid variants.
    pub static_tile: (f64, f64),
    pub sweep_structure: SweepStructure,
    pub pbsm_partitions: (usize, usize),
    pub stripe_storage: StripeStorage,
    pub node_capacity: usize,
    pub quant_bits: u32,
    /// Byte budget for memory-intensive algorithms; `None` derives it from
    /// available memory.
    pub memory_budget: Option<u64>,
    /// Index the smaller dataset in memory-frugal algorithms.
    pub swap: bool,
    /// Verification threads; 1 keeps the run strictly serial.
    pub threads: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            static_tile: (1.0, 1.0),
            sweep_structure: SweepStructure::Striped,
            pbsm_partitions: sweep::DEFAULT_PBSM_PARTITIONS,
            stripe_storage: StripeStorage::Map,
            node_capacity: tree::DEFAULT_NODE_CAPACITY,
            quant_bits: tree::DEFAULT_QUANT_BITS,
            memory_budget: None,
            swap: true,
            threads: 1,
        }
    }
}

impl Params {
    pub fn validate(&self, algorithm: Algorithm) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match algorithm {
            Algorithm::StaticRadon | Algorithm::StaticGiant => {
                Grid::new(self.static_tile.0, self.static_tile.1)?;
            }
            Algorithm::Pbsm if self.pbsm_partitions.0 == 0 || self.pbsm_partitions.1 == 0 => {
                return bad("PBSM needs at least one partition per axis".into());
            }
            Algorithm::RTree if self.node_capacity < 4 => {
                return bad(format!("R-tree node capacity must be at least 4, got {}", self.node_capacity));
            }
            Algorithm::Quadtree | Algorithm::CrTree if self.node_capacity < 2 => {
                return bad(format!("node capacity must be at least 2, got {}", self.node_capacity));
            }
            Algorithm::CrTree => {
                Quantizer::new(self.quant_bits).map_err(Error::Config)?;
            }
            _ => {}
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    /// The parameters `algorithm` actually reads, for reports.
    pub fn relevant(&self, algorithm: Algorithm) -> serde_json::Value {
        use serde_json::json;
        let mut v = match algorithm {
            Algorithm::StaticRadon | Algorithm::StaticGiant => {
                json!({"tile_width": self.static_tile.0, "tile_height": self.static_tile.1})
            }
            Algorithm::PlaneSweep => json!({"sweep_structure": self.sweep_structure}),
            Algorithm::Pbsm => json!({
                "partitions": format!("{}x{}", self.pbsm_partitions.0, self.pbsm_partitions.1)
            }),
            Algorithm::StripeSweep => json!({"stripe_storage": self.stripe_storage}),
            Algorithm::RTree | Algorithm::Quadtree => json!({"node_capacity": self.node_capacity}),
            Algorithm::CrTree => {
                json!({"node_capacity": self.node_capacity, "quant_bits": self.quant_bits})
            }
            Algorithm::Radon | Algorithm::Giant => json!({}),
        };
        if !algorithm.is_memory_intensive() {
            v["swap"] = json!(self.swap);
        }
        if self.threads > 1 {
            v["threads"] = json!(self.threads);
        }
        v
    }
}

/// Default budget for memory-intensive runs: 75% of available memory, or
/// 4 GiB when that cannot be read.
pub fn default_memory_budget() -> u64 {
    const FALLBACK: u64 = 4 << 30;
    let Ok(info) = std::fs::read_to_string("/proc/meminfo") else {
        return FALLBACK;
    };
    info.lines()
        .find_map(|l| l.strip_prefix("MemAvailable:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse::<u64>().ok())
        .map_or(FALLBACK, |kb| kb * 1024 / 4 * 3)
}

/// Builds the source-only index of a memory-frugal algorithm.
pub fn build_source_index(
    source: &[Geometry],
    algorithm: Algorithm,
    params: &Params,
) -> Result<Box<dyn SourceIndex>> {
    params.validate(algorithm)?;
    if source.is_empty() {
        return Err(Error::EmptyDataset("source"));
    }
    let m = params.node_capacity;
    Ok(match algorithm {
        Algorithm::Giant => Box::new(SourceGrid::build(source, Grid::dynamic(source)?)?),
        Algorithm::StaticGiant => {
            let (w, h) = params.static_tile;
            Box::new(SourceGrid::build(source, Grid::new(w, h)?)?)
        }
        Algorithm::StripeSweep => Box::new(sweep::stripe_sweep_build(source, params.stripe_storage)?),
        Algorithm::RTree => Box::new(tree::rtree_build(source, m)),
        Algorithm::Quadtree => Box::new(tree::quadtree_build(source, m, tree::quadtree::DEFAULT_MAX_DEPTH)),
        Algorithm::CrTree => Box::new(tree::crtree_build(
            source,
            m,
            Quantizer::new(params.quant_bits).map_err(Error::Config)?,
        )),
        other => {
            return Err(Error::Config(format!("{other} does not build a source-only index")));
        }
    })
}

/// Enumerates every MBR-intersecting pair with `algorithm`, in its own
/// order, without swapping or verifying.
pub fn candidate_pairs(
    source: &[Geometry],
    target: &[Geometry],
    algorithm: Algorithm,
    params: &Params,
    emit: &mut dyn FnMut(u32, u32),
) -> Result<()> {
    params.validate(algorithm)?;
    match algorithm {
        Algorithm::Radon => {
            radon_join(source, target, GridMode::Dynamic, emit)?;
        }
        Algorithm::StaticRadon => {
            let (width, height) = params.static_tile;
            radon_join(source, target, GridMode::Static { width, height }, emit)?;
        }
        Algorithm::PlaneSweep => {
            sweep::plane_sweep(source, target, params.sweep_structure, emit)?;
        }
        Algorithm::Pbsm => {
            sweep::pbsm(source, target, params.pbsm_partitions, emit)?;
        }
        _ => {
            let index = build_source_index(source, algorithm, params)?;
            let mut scratch = Scratch::new(source.len());
            let mut buf = Vec::new();
            for t in target {
                buf.clear();
                index.candidates(t.mbr(), &mut scratch, &mut buf);
                for &s in &buf {
                    emit(s, t.id());
                }
            }
        }
    }
    Ok(())
}

/// Verifies `(source, target)` pairs, on `threads` workers when above 1.
pub(crate) fn verify_pairs<'a>(
    pairs: &[(&'a Geometry, &'a Geometry)],
    threads: usize,
) -> Vec<Result<RelationSet>> {
    let run = |chunk: &[(&Geometry, &Geometry)]| -> Vec<Result<RelationSet>> {
        chunk.iter().map(|(s, t)| verify_pair(s, t)).collect()
    };
    if threads <= 1 || pairs.len() < 2 * threads {
        return run(pairs);
    }
    let size = pairs.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = pairs.chunks(size).map(|c| scope.spawn(move || run(c))).collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("verification worker panicked"))
            .collect()
    })
}

/// Whether a memory-frugal run should index the target instead: only when
/// the target is nonempty and strictly smaller.
pub fn should_swap(source_count: u64, target_count: u64) -> bool {
    target_count > 0 && target_count < source_count
}

/// Runs an algorithm over in-memory datasets.
pub fn interlink_geometries(
    source: &[Geometry],
    target: &[Geometry],
    algorithm: Algorithm,
    params: &Params,
) -> Result<(LinkSet, RunTimings)> {
    params.validate(algorithm)?;
    if !algorithm.is_memory_intensive()
        && params.swap
        && should_swap(source.len() as u64, target.len() as u64)
    {
        let (links, timings) = run_in_memory(target, source, algorithm, params)?;
        return Ok((links.transpose(), timings));
    }
    run_in_memory(source, target, algorithm, params)
}

fn run_in_memory(
    source: &[Geometry],
    target: &[Geometry],
    algorithm: Algorithm,
    params: &Params,
) -> Result<(LinkSet, RunTimings)> {
    let mut links = LinkSet::new();
    if target.is_empty() {
        return Ok((links, RunTimings::default()));
    }
    let started = Instant::now();
    let mut pairs = Vec::new();
    candidate_pairs(source, target, algorithm, params, &mut |s, t| pairs.push((s, t)))?;
    let filtering = started.elapsed();
    let started = Instant::now();
    let refs: Vec<_> = pairs
        .iter()
        .map(|&(s, t)| (&source[s as usize], &target[t as usize]))
        .collect();
    for (&(s, t), r) in pairs.iter().zip(verify_pairs(&refs, params.threads)) {
        links.record(s, t, r)?;
    }
    Ok((
        links,
        RunTimings {
            filtering,
            verification: started.elapsed(),
        },
    ))
}

/// Output labels of the linked geometries, by id.
#[derive(Clone, Debug, Default)]
pub struct Labels {
    source: FxHashMap<u32, String>,
    target: FxHashMap<u32, String>,
}

impl Labels {
    pub fn source(&self, id: u32) -> String {
        self.source.get(&id).cloned().unwrap_or_else(|| id.to_string())
    }

    pub fn target(&self, id: u32) -> String {
        self.target.get(&id).cloned().unwrap_or_else(|| id.to_string())
    }
}

/// Result of a file-based run.
#[derive(Debug)]
pub struct Interlinked {
    pub algorithm: Algorithm,
    pub params: Params,
    pub links: LinkSet,
    pub timings: RunTimings,
    pub labels: Labels,
    pub source_skips: SkipReport,
    pub target_skips: SkipReport,
    /// The target was indexed and the source streamed.
    pub swapped: bool,
}

impl Interlinked {
    /// Output triples in `(source, relation, target)` order, sorted.
    pub fn triples(&self) -> Vec<LinkTriple> {
        let mut v: Vec<LinkTriple> = self
            .links
            .links()
            .iter()
            .flat_map(|l| {
                let (s, t) = (self.labels.source(l.source), self.labels.target(l.target));
                l.relations.iter().map(move |relation| LinkTriple {
                    source: s.clone(),
                    relation,
                    target: t.clone(),
                })
            })
            .collect();
        v.sort();
        v
    }

    pub fn report(&self) -> Report {
        Report {
            algorithm: self.algorithm.name().to_string(),
            params: self.params.relevant(self.algorithm),
            t_f_ms: self.timings.t_f_ms(),
            t_v_ms: self.timings.t_v_ms(),
            verified: self.links.verified(),
            related: self.links.related(),
            per_relation_counts: self.links.per_relation_counts(),
            triples: self.links.triple_count(),
            degenerate_pairs: self.links.degenerate(),
            swapped: self.swapped,
            skipped_records: self.source_skips.total() + self.target_skips.total(),
        }
    }
}

/// Loads the geometries and uris of a dataset, dropping the attributes.
fn load(d: &DatasetDescriptor) -> Result<(Vec<Geometry>, Vec<Option<String>>, SkipReport)> {
    let mut reader = stream_target(d)?;
    // one cheap pass over the file spares the doubling growth of both vectors
    let hint = d.count_records()? as usize;
    let (mut geoms, mut uris) = (Vec::with_capacity(hint), Vec::with_capacity(hint));
    for p in reader.by_ref() {
        let p = p?;
        geoms.push(p.geometry);
        uris.push(p.uri);
    }
    geoms.shrink_to_fit();
    uris.shrink_to_fit();
    Ok((geoms, uris, reader.skips().clone()))
}

fn labels_of(uris: &[Option<String>], ids: impl Iterator<Item = u32>) -> FxHashMap<u32, String> {
    ids.filter_map(|id| uris[id as usize].clone().map(|u| (id, u))).collect()
}

/// Runs an algorithm over two dataset files.
///
/// Filtering time covers loading the in-memory datasets and building the
/// index (for memory-intensive algorithms also enumerating the pairs).
/// Verification time covers verification and, for memory-frugal algorithms,
/// reading the streamed dataset and probing the index.
pub fn interlink(
    source: &DatasetDescriptor,
    target: &DatasetDescriptor,
    algorithm: Algorithm,
    params: &Params,
) -> Result<Interlinked> {
    params.validate(algorithm)?;
    if algorithm.is_memory_intensive() {
        let budget = params.memory_budget.unwrap_or_else(default_memory_budget);
        let needed = target.file_size()?;
        if needed > budget {
            return Err(Error::OutOfMemory {
                algorithm: algorithm.name().to_string(),
                needed,
                budget,
            });
        }
        return interlink_in_memory(source, target, algorithm, params);
    }
    let swapped = params.swap && should_swap(source.count_records()?, target.count_records()?);
    let (indexed, streamed) = if swapped { (target, source) } else { (source, target) };
    let run = interlink_streaming(indexed, streamed, algorithm, params)?;
    Ok(if swapped {
        Interlinked {
            links: run.links.transpose(),
            labels: Labels {
                source: run.labels.target,
                target: run.labels.source,
            },
            source_skips: run.target_skips,
            target_skips: run.source_skips,
            swapped: true,
            ..run
        }
    } else {
        run
    })
}

fn interlink_in_memory(
    source: &DatasetDescriptor,
    target: &DatasetDescriptor,
    algorithm: Algorithm,
    params: &Params,
) -> Result<Interlinked> {
    let started = Instant::now();
    let (sg, su, source_skips) = load(source)?;
    let (tg, tu, target_skips) = load(target)?;
    let load = started.elapsed();
    let (links, mut timings) = run_in_memory(&sg, &tg, algorithm, params)?;
    timings.filtering += load;
    let labels = Labels {
        source: labels_of(&su, links.links().iter().map(|l| l.source)),
        target: labels_of(&tu, links.links().iter().map(|l| l.target)),
    };
    Ok(Interlinked {
        algorithm,
        params: params.clone(),
        links,
        timings,
        labels,
        source_skips,
        target_skips,
        swapped: false,
    })
}

/// Targets buffered per verification round when verifying on several threads.
const STREAM_BATCH: usize = 1024;

fn interlink_streaming(
    source: &DatasetDescriptor,
    target: &DatasetDescriptor,
    algorithm: Algorithm,
    params: &Params,
) -> Result<Interlinked> {
    let started = Instant::now();
    let (sg, su, source_skips) = load(source)?;
    let index = build_source_index(&sg, algorithm, params)?;
    let filtering = started.elapsed();

    let started = Instant::now();
    let mut links = LinkSet::new();
    let mut target_labels = FxHashMap::default();
    let mut scratch = Scratch::new(sg.len());
    let mut reader = stream_target(target)?;
    let batch = if params.threads > 1 { STREAM_BATCH } else { 1 };
    let mut pending: Vec<GeometryProfile> = Vec::with_capacity(batch);
    let mut cands: Vec<(u32, u32)> = Vec::new();
    let mut buf = Vec::new();
    loop {
        let next = reader.next().transpose()?;
        let done = next.is_none();
        if let Some(p) = next {
            buf.clear();
            index.candidates(p.geometry.mbr(), &mut scratch, &mut buf);
            let slot = pending.len() as u32;
            cands.extend(buf.iter().map(|&s| (s, slot)));
            pending.push(p);
        }
        if pending.len() == batch || (done && !pending.is_empty()) {
            let refs: Vec<_> = cands
                .iter()
                .map(|&(s, k)| (&sg[s as usize], &pending[k as usize].geometry))
                .collect();
            let outcomes = verify_pairs(&refs, params.threads);
            for (&(s, k), r) in cands.iter().zip(outcomes) {
                let p = &pending[k as usize];
                let before = links.related();
                links.record(s, p.geometry.id(), r)?;
                if links.related() > before {
                    if let Some(u) = &p.uri {
                        target_labels.entry(p.geometry.id()).or_insert_with(|| u.clone());
                    }
                }
            }
            pending.clear();
            cands.clear();
        }
        if done {
            break;
        }
    }
    let target_skips = reader.skips().clone();
    let labels = Labels {
        source: labels_of(&su, links.links().iter().map(|l| l.source)),
        target: target_labels,
    };
    Ok(Interlinked {
        algorithm,
        params: params.clone(),
        links,
        timings: RunTimings {
            filtering,
            verification: started.elapsed(),
        },
        labels,
        source_skips,
        target_skips,
        swapped: false,
    })
}
