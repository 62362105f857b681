//! Self-description of every algorithm: what it does and which knobs it has.
//!
//! The parameter domains declared here also drive grid search.

use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

use crate::batch::{Algorithm, Params};
use crate::error::{Error, Result};
use crate::parallel::DEFAULT_MACRO_GRID;
use crate::progressive::ProgressiveAlgorithm;

/// Values a parameter can take.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// Integer range; grid search samples the ends, the default and the
    /// geometric midpoints between them.
    Integer { min: u64, max: u64 },
    /// Positive real range, sampled like [`Domain::Integer`].
    Real { min: f64, max: f64 },
    /// One of a fixed set, all sampled.
    Choice { values: Vec<Value> },
    /// Not searched (resource limits, switches).
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamDoc {
    pub name: &'static str,
    /// Command-line flag setting it.
    pub flag: &'static str,
    pub description: &'static str,
    pub default: Value,
    pub domain: Domain,
}

impl ParamDoc {
    pub fn min(&self) -> Option<Value> {
        match &self.domain {
            Domain::Integer { min, .. } => Some(json!(min)),
            Domain::Real { min, .. } => Some(json!(min)),
            _ => None,
        }
    }

    pub fn max(&self) -> Option<Value> {
        match &self.domain {
            Domain::Integer { max, .. } => Some(json!(max)),
            Domain::Real { max, .. } => Some(json!(max)),
            _ => None,
        }
    }

    /// Values grid search tries, default first.
    pub fn samples(&self) -> Vec<Value> {
        let mut out = vec![self.default.clone()];
        let mut add = |v: Value| {
            if !out.contains(&v) {
                out.push(v);
            }
        };
        match &self.domain {
            Domain::Integer { min, max } => {
                let d = self.default.as_u64().unwrap_or(*min);
                let mid = |a: u64, b: u64| ((a as f64) * (b as f64)).sqrt().round() as u64;
                for v in [*min, mid(*min, d), mid(d, *max), *max] {
                    add(json!(v));
                }
            }
            Domain::Real { min, max } => {
                let d = self.default.as_f64().unwrap_or(*min);
                for v in [*min, (min * d).sqrt(), (d * max).sqrt(), *max] {
                    add(json!(v));
                }
            }
            Domain::Choice { values } => values.iter().cloned().for_each(add),
            Domain::Fixed => {}
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgorithmDoc {
    pub name: &'static str,
    /// batch, progressive or parallel.
    pub family: &'static str,
    pub summary: &'static str,
    pub parameters: Vec<ParamDoc>,
    /// Values in effect for the run being documented.
    pub configuration: Value,
}

fn p(name: &'static str, flag: &'static str, description: &'static str, default: Value, domain: Domain) -> ParamDoc {
    ParamDoc {
        name,
        flag,
        description,
        default,
        domain,
    }
}

fn choices(v: &[&str]) -> Domain {
    Domain::Choice {
        values: v.iter().map(|s| json!(s)).collect(),
    }
}

/// A value as typed on the command line.
pub fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn node_capacity(min: u64) -> ParamDoc {
    p(
        "node_capacity",
        "--node-capacity",
        "Maximum entries per tree node",
        json!(crate::tree::DEFAULT_NODE_CAPACITY),
        Domain::Integer { min, max: 64 },
    )
}

fn batch_params(a: Algorithm) -> Vec<ParamDoc> {
    let mut v = match a {
        Algorithm::StaticRadon | Algorithm::StaticGiant => vec![p(
            "tile_size",
            "--tile-size",
            "Side of the square grid tiles, in coordinate units",
            json!(Params::default().static_tile.0),
            Domain::Real { min: 0.1, max: 100.0 },
        )],
        Algorithm::PlaneSweep => vec![p(
            "sweep_structure",
            "--sweep-structure",
            "Active-set structure: one list per dataset, or horizontal bands",
            json!("striped"),
            choices(&["list", "striped"]),
        )],
        Algorithm::Pbsm => vec![p(
            "partitions",
            "--partitions",
            "Partitions per axis (NxN) over the joint extent",
            json!(crate::sweep::DEFAULT_PBSM_PARTITIONS.0),
            Domain::Integer { min: 4, max: 256 },
        )],
        Algorithm::StripeSweep => vec![p(
            "stripe_storage",
            "--stripe-storage",
            "Per-stripe storage: sorted id lists or STR-packed trees",
            json!("map"),
            choices(&["map", "str"]),
        )],
        Algorithm::RTree => vec![node_capacity(4)],
        Algorithm::Quadtree => vec![node_capacity(2)],
        Algorithm::CrTree => vec![
            node_capacity(2),
            p(
                "quant_bits",
                "--quant-bits",
                "Bits per quantized MBR coordinate",
                json!(crate::tree::DEFAULT_QUANT_BITS),
                Domain::Choice {
                    values: vec![json!(4), json!(8), json!(16)],
                },
            ),
        ],
        Algorithm::Radon | Algorithm::Giant => vec![],
    };
    if a.is_memory_intensive() {
        v.push(p(
            "memory_budget",
            "--memory-budget",
            "Bytes the in-memory datasets may use (default: 75% of available memory)",
            Value::Null,
            Domain::Fixed,
        ));
    } else {
        v.push(p(
            "swap",
            "--no-swap",
            "Index the smaller dataset and stream the larger one",
            json!(true),
            Domain::Fixed,
        ));
    }
    v.push(p(
        "threads",
        "--threads",
        "Verification threads",
        json!(1),
        Domain::Fixed,
    ));
    v
}

fn batch_summary(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Radon => "Equigrid over both datasets with tiles of the mean MBR size; pairs verified in the tile holding their reference point",
        Algorithm::StaticRadon => "RADON with a fixed tile size",
        Algorithm::Giant => "GIA.nt: Equigrid over the source only, targets streamed and probed one at a time",
        Algorithm::StaticGiant => "GIA.nt with a fixed tile size",
        Algorithm::PlaneSweep => "Sorts both datasets by x and sweeps a vertical line, pairing overlapping active MBRs",
        Algorithm::Pbsm => "Partition-based spatial merge join: a plane sweep inside each cell of a regular partitioning",
        Algorithm::StripeSweep => "Source binned into vertical stripes of the mean source width; targets probe the stripes they span",
        Algorithm::RTree => "STR-packed R-tree over the source, probed by streamed targets",
        Algorithm::Quadtree => "Region quadtree over the source, probed by streamed targets",
        Algorithm::CrTree => "Cache-conscious R-tree with quantized relative MBRs, exact MBR check on the leaves",
    }
}

fn progressive_summary(a: ProgressiveAlgorithm) -> &'static str {
    match a {
        ProgressiveAlgorithm::Pg => "Verifies the budget's worth of highest-weighted GIA.nt candidate pairs, best first",
        ProgressiveAlgorithm::Dpg => "Like pg, but pairs sharing a geometry with a detected link move up the queue",
        ProgressiveAlgorithm::Lpg => "Keeps an equal quota of best pairs per target, then ranks them globally",
        ProgressiveAlgorithm::Gog => "Ranks geometries by average pair weight and takes pairs of the best geometries first",
        ProgressiveAlgorithm::Ipg => "Round-robin over the ranked geometries, one best remaining pair per turn",
        ProgressiveAlgorithm::PRadon => "RADON tile by tile, tiles ordered by candidate count, pairs by weight",
    }
}

fn progressive_params(a: ProgressiveAlgorithm) -> Vec<ParamDoc> {
    let schemes = &["cf", "js", "x2", "mbro", "isp"];
    let mut v = vec![
        p(
            "budget",
            "--budget",
            "Maximum verifications; a value below 1 is a fraction of the candidate pairs",
            json!(0.1),
            Domain::Fixed,
        ),
        p("scheme", "--scheme", "Weighting scheme", json!("js"), choices(schemes)),
        p(
            "secondary",
            "--secondary",
            "Tie-breaking weighting scheme (composite weighting)",
            Value::Null,
            Domain::Fixed,
        ),
        p(
            "mbro_norm",
            "--mbro-norm",
            "MBR-overlap normalization",
            json!("jaccard"),
            choices(&["jaccard", "min-area"]),
        ),
    ];
    if a == ProgressiveAlgorithm::PRadon {
        v.push(p(
            "tile_order",
            "--tile-order",
            "Visit tiles by decreasing or increasing candidate count",
            json!("dec"),
            choices(&["dec", "inc"]),
        ));
    }
    v
}

/// Every algorithm with its default configuration.
pub fn registry() -> Vec<AlgorithmDoc> {
    let mut out: Vec<AlgorithmDoc> = Algorithm::ALL
        .into_iter()
        .map(|a| {
            let parameters = batch_params(a);
            AlgorithmDoc {
                name: a.name(),
                family: "batch",
                summary: batch_summary(a),
                configuration: defaults(&parameters),
                parameters,
            }
        })
        .collect();
    out.extend(ProgressiveAlgorithm::ALL.into_iter().map(|a| {
        let parameters = progressive_params(a);
        AlgorithmDoc {
            name: a.name(),
            family: "progressive",
            summary: progressive_summary(a),
            configuration: defaults(&parameters),
            parameters,
        }
    }));
    let parameters = vec![
        p("workers", "--workers", "Worker threads", json!(1), Domain::Fixed),
        p(
            "macro_grid",
            "--macro-grid",
            "Equigrid tiles merged into one partition per axis (NxM)",
            json!(format!("{}x{}", DEFAULT_MACRO_GRID.0, DEFAULT_MACRO_GRID.1)),
            Domain::Fixed,
        ),
    ];
    out.push(AlgorithmDoc {
        name: "parallel",
        family: "parallel",
        summary: "Partitions both datasets with the source Equigrid and joins the partitions on independent workers, batch or progressive",
        configuration: defaults(&parameters),
        parameters,
    });
    out
}

fn defaults(params: &[ParamDoc]) -> Value {
    Value::Object(params.iter().map(|p| (p.name.to_string(), p.default.clone())).collect())
}

pub fn doc_for(name: &str) -> Result<AlgorithmDoc> {
    registry().into_iter().find(|d| d.name == name).ok_or_else(|| {
        let names: Vec<_> = registry().iter().map(|d| d.name).collect();
        Error::Config(format!("unknown algorithm `{name}` ({})", names.join(", ")))
    })
}

impl AlgorithmDoc {
    /// Replaces the documented configuration with the values in effect.
    pub fn with_configuration(mut self, configuration: Value) -> Self {
        if let (Value::Object(base), Value::Object(given)) = (&mut self.configuration, configuration) {
            base.extend(given);
        }
        self
    }
}

impl fmt::Display for AlgorithmDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({})", self.name, self.family)?;
        writeln!(f, "  {}", self.summary)?;
        if self.parameters.is_empty() {
            return Ok(());
        }
        writeln!(f, "\nparameters:")?;
        for p in &self.parameters {
            let range = match (&p.domain, p.min(), p.max()) {
                (_, Some(lo), Some(hi)) => format!(" [{lo}..{hi}]"),
                (Domain::Choice { values }, ..) => {
                    let v: Vec<String> = values.iter().map(plain).collect();
                    format!(" {{{}}}", v.join(", "))
                }
                _ => String::new(),
            };
            writeln!(f, "  {:<16} {:<18} default {}{range}", p.name, p.flag, plain(&p.default))?;
            writeln!(f, "  {:<16} {}", "", p.description)?;
        }
        writeln!(f, "\nconfiguration: {}", self.configuration)
    }
}
