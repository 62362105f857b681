//! Exhaustive grid search over an algorithm's declared parameter domains.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::batch::{interlink_geometries, Algorithm, Params};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::progressive::{run_progressive, ProgressiveAlgorithm, ProgressiveConfig, TileOrder, Weighting};
use crate::workbench::docs::{doc_for, Domain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Shortest filtering + verification time.
    MinRuntime,
    /// Highest Progressive Geometry Recall (budget-aware algorithms only).
    MaxPgr,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "min_runtime" => Ok(Objective::MinRuntime),
            "max_pgr" => Ok(Objective::MaxPgr),
            _ => Err(Error::Config(format!("unknown objective `{s}` (min_runtime, max_pgr)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub algorithm: String,
    pub objective: Objective,
    pub repetitions: usize,
    /// Progressive budget as a fraction of the candidate pairs.
    pub budget_fraction: f64,
    /// Starting point; searched parameters are overwritten per trial.
    pub params: Params,
    pub weighting: Weighting,
    pub tile_order: TileOrder,
    /// Explicit value lists replacing the declared sampling of a parameter.
    pub values: BTreeMap<String, Vec<Value>>,
}

impl SearchConfig {
    pub fn new(algorithm: impl Into<String>, objective: Objective) -> Self {
        SearchConfig {
            algorithm: algorithm.into(),
            objective,
            repetitions: 1,
            budget_fraction: 0.1,
            params: Params::default(),
            weighting: Weighting::atomic(crate::progressive::Scheme::Js),
            tile_order: TileOrder::default(),
            values: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trial {
    pub configuration: Value,
    /// Mean over the repetitions.
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pgr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub algorithm: String,
    pub objective: Objective,
    pub trials: Vec<Trial>,
    /// Index of the winning trial; `None` when every trial failed.
    pub best: Option<usize>,
    /// Relative advantage of the winner over the runner-up.
    pub margin: Option<f64>,
}

impl SearchResult {
    pub fn best_trial(&self) -> Option<&Trial> {
        self.best.map(|i| &self.trials[i])
    }
}

fn as_u64(name: &str, v: &Value) -> Result<u64> {
    v.as_u64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Error::Config(format!("{name} expects a positive integer, got {v}")))
}

fn as_f64(name: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Error::Config(format!("{name} expects a number, got {v}")))
}

fn parse<T: for<'de> Deserialize<'de>>(name: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|_| Error::Config(format!("invalid value {v} for {name}")))
}

/// Sets one documented batch parameter.
pub fn apply_batch_param(params: &mut Params, name: &str, v: &Value) -> Result<()> {
    match name {
        "tile_size" => {
            let s = as_f64(name, v)?;
            params.static_tile = (s, s);
        }
        "sweep_structure" => params.sweep_structure = parse(name, v)?,
        "partitions" => {
            let n = as_u64(name, v)? as usize;
            params.pbsm_partitions = (n, n);
        }
        "stripe_storage" => params.stripe_storage = parse(name, v)?,
        "node_capacity" => params.node_capacity = as_u64(name, v)? as usize,
        "quant_bits" => params.quant_bits = as_u64(name, v)? as u32,
        other => return Err(Error::Config(format!("`{other}` is not a searchable parameter"))),
    }
    Ok(())
}

/// Sets one documented progressive parameter.
pub fn apply_progressive_param(cfg: &mut ProgressiveConfig, name: &str, v: &Value) -> Result<()> {
    match name {
        "scheme" => cfg.weighting.primary = parse(name, v)?,
        "mbro_norm" => cfg.weighting.mbro = parse(name, v)?,
        "tile_order" => {
            cfg.tile_order = v
                .as_str()
                .ok_or_else(|| Error::Config(format!("invalid value {v} for tile_order")))?
                .parse()?
        }
        other => return Err(Error::Config(format!("`{other}` is not a searchable parameter"))),
    }
    Ok(())
}

/// Every combination of the given value lists, in lexicographic order.
fn combinations(domains: &[(String, Vec<Value>)]) -> Vec<Map<String, Value>> {
    let mut out = vec![Map::new()];
    for (name, values) in domains {
        out = out
            .into_iter()
            .flat_map(|m| {
                values.iter().map(move |v| {
                    let mut m = m.clone();
                    m.insert(name.clone(), v.clone());
                    m
                })
            })
            .collect();
    }
    out
}

fn mean_ms(total: Duration, n: usize) -> f64 {
    total.as_secs_f64() * 1e3 / n as f64
}

/// Tries every combination of the searchable parameters of `cfg.algorithm`
/// (the declared samples, or `cfg.values` where given) and returns the best
/// by the objective. Failing trials are kept with their error.
pub fn grid_search(source: &[Geometry], target: &[Geometry], cfg: &SearchConfig) -> Result<SearchResult> {
    let doc = doc_for(&cfg.algorithm)?;
    if cfg.repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    let batch = Algorithm::from_str(&cfg.algorithm).ok();
    let progressive = ProgressiveAlgorithm::from_str(&cfg.algorithm).ok();
    if batch.is_none() && progressive.is_none() {
        return Err(Error::Config(format!("{} has no searchable configuration", cfg.algorithm)));
    }
    if cfg.objective == Objective::MaxPgr && progressive.is_none() {
        return Err(Error::Config(format!(
            "max_pgr needs a budget-aware algorithm; {} is budget-agnostic",
            cfg.algorithm
        )));
    }
    if let Some(unknown) = cfg.values.keys().find(|k| !doc.parameters.iter().any(|p| p.name == k.as_str())) {
        return Err(Error::Config(format!("{} has no parameter `{unknown}`", cfg.algorithm)));
    }
    let domains: Vec<(String, Vec<Value>)> = doc
        .parameters
        .iter()
        .filter(|p| p.domain != Domain::Fixed || cfg.values.contains_key(p.name))
        .map(|p| (p.name.to_string(), cfg.values.get(p.name).cloned().unwrap_or_else(|| p.samples())))
        .collect();

    // ground truth for PGR
    let (total_related, candidates) = if progressive.is_some() {
        let (links, _) = interlink_geometries(source, target, Algorithm::Giant, &Params::default())?;
        (links.related(), links.verified())
    } else {
        (0, 0)
    };
    let budget = ((cfg.budget_fraction * candidates as f64).round() as u64).max(1);

    let mut trials = Vec::new();
    for combo in combinations(&domains) {
        let configuration = Value::Object(combo.clone());
        let outcome = if let Some(a) = batch {
            run_batch_trial(source, target, a, cfg, &combo)
        } else {
            let a = progressive.expect("checked above");
            run_progressive_trial(source, target, a, cfg, &combo, budget, total_related)
        };
        trials.push(match outcome {
            Ok((runtime_ms, pgr)) => Trial {
                configuration,
                runtime_ms,
                pgr,
                error: None,
            },
            Err(e) => Trial {
                configuration,
                runtime_ms: 0.0,
                pgr: None,
                error: Some(e.to_string()),
            },
        });
    }

    let score = |t: &Trial| match cfg.objective {
        Objective::MinRuntime => -t.runtime_ms,
        Objective::MaxPgr => t.pgr.unwrap_or(0.0),
    };
    let mut ok: Vec<usize> = (0..trials.len()).filter(|&i| trials[i].error.is_none()).collect();
    // stable: earlier trials (the default comes first) win ties
    ok.sort_by(|&a, &b| score(&trials[b]).total_cmp(&score(&trials[a])));
    let best = ok.first().copied();
    let margin = match ok.as_slice() {
        [a, b, ..] => {
            let (x, y) = (score(&trials[*a]), score(&trials[*b]));
            (y != 0.0).then(|| (x - y) / y.abs())
        }
        _ => None,
    };
    Ok(SearchResult {
        algorithm: cfg.algorithm.clone(),
        objective: cfg.objective,
        trials,
        best,
        margin,
    })
}

fn run_batch_trial(
    source: &[Geometry],
    target: &[Geometry],
    a: Algorithm,
    cfg: &SearchConfig,
    combo: &Map<String, Value>,
) -> Result<(f64, Option<f64>)> {
    let mut params = cfg.params.clone();
    for (k, v) in combo {
        apply_batch_param(&mut params, k, v)?;
    }
    let mut total = Duration::ZERO;
    for _ in 0..cfg.repetitions {
        total += interlink_geometries(source, target, a, &params)?.1.total();
    }
    Ok((mean_ms(total, cfg.repetitions), None))
}

fn run_progressive_trial(
    source: &[Geometry],
    target: &[Geometry],
    a: ProgressiveAlgorithm,
    cfg: &SearchConfig,
    combo: &Map<String, Value>,
    budget: u64,
    total_related: u64,
) -> Result<(f64, Option<f64>)> {
    let mut pc = ProgressiveConfig {
        algorithm: a,
        weighting: cfg.weighting,
        budget,
        tile_order: cfg.tile_order,
    };
    for (k, v) in combo {
        apply_progressive_param(&mut pc, k, v)?;
    }
    if pc.weighting.secondary == Some(pc.weighting.primary) {
        return Err(Error::Config("composite weighting needs two different schemes".into()));
    }
    let mut total = Duration::ZERO;
    let mut pgr = 0.0;
    for _ in 0..cfg.repetitions {
        let run = run_progressive(source, target, &pc)?;
        total += run.timings.total();
        pgr = run.metrics(total_related, budget).pgr;
    }
    Ok((mean_ms(total, cfg.repetitions), Some(pgr)))
}
