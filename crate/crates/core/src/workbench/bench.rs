//! Benchmark suites and their versioned JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::time::Duration;

use rustc_hash::FxHasher;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::batch::{interlink, interlink_geometries, Algorithm, LinkSet, Params, Report, RunTimings};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::io::{read_dataset, DatasetDescriptor};
use crate::progressive::{run_progressive, Metrics, ProgressiveAlgorithm, ProgressiveConfig, TileOrder, Weighting};
use crate::workbench::oracle::{brute_force_oracle_capped, DEFAULT_ORACLE_CAP};

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// One measured configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    /// batch, progressive or parallel.
    pub family: String,
    pub algorithm: String,
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_fraction: Option<f64>,
    pub repetitions: usize,
    /// Means over the repetitions.
    pub t_f_ms: f64,
    pub t_v_ms: f64,
    pub verified: u64,
    pub related: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<u64>,
    pub per_relation_counts: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pgr: Option<f64>,
    /// Fingerprint of the LinkSet (batch rows).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BenchRow {
    pub fn failed(family: &str, algorithm: &str, params: Value, e: &Error) -> Self {
        BenchRow {
            family: family.into(),
            algorithm: algorithm.into(),
            params,
            error: Some(e.to_string()),
            ..Default::default()
        }
    }

    fn fill(&mut self, links: &LinkSet) {
        self.verified = links.verified();
        self.related = links.related();
        self.per_relation_counts = counts(links);
    }

    /// Precision, recall and PGR, leaving out the undefined ones.
    pub fn set_metrics(&mut self, m: &Metrics) {
        let keep = |name: &str, v: f64| (!m.undefined.contains(&name)).then_some(v);
        self.precision = keep("precision", m.precision);
        self.recall = keep("recall", m.recall);
        self.pgr = keep("pgr", m.pgr);
    }
}

impl From<Report> for BenchRow {
    fn from(r: Report) -> Self {
        BenchRow {
            family: "batch".into(),
            algorithm: r.algorithm,
            params: r.params,
            repetitions: 1,
            t_f_ms: r.t_f_ms,
            t_v_ms: r.t_v_ms,
            verified: r.verified,
            related: r.related,
            per_relation_counts: r.per_relation_counts.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            ..Default::default()
        }
    }
}

fn counts(links: &LinkSet) -> BTreeMap<String, u64> {
    links.per_relation_counts().into_iter().map(|(k, v)| (k.into(), v)).collect()
}

/// Order-independent fingerprint of the links.
pub fn links_hash(links: &LinkSet) -> String {
    let mut h = FxHasher::default();
    for (s, r, t) in links.id_triples() {
        (s, r.name(), t).hash(&mut h);
    }
    format!("{:016x}", h.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub source: String,
    pub target: String,
    pub rows: Vec<BenchRow>,
    /// All successful batch rows produced the same LinkSet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_links_agree: Option<bool>,
    /// Batch rows match the brute-force oracle (when within its cap).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_agrees: Option<bool>,
}

impl BenchmarkReport {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        BenchmarkReport {
            schema_version: SCHEMA_VERSION,
            source: source.into(),
            target: target.into(),
            rows: Vec::new(),
            batch_links_agree: None,
            oracle_agrees: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: BenchmarkReport =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::format(
                path,
                format!("report schema {} (this build reads {SCHEMA_VERSION})", report.schema_version),
            ));
        }
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Appends the rows to the report at `path`, creating it if missing.
    pub fn append_to(&self, path: &Path) -> Result<()> {
        if !path.exists() {
            return self.save(path);
        }
        let mut existing = BenchmarkReport::load(path)?;
        existing.rows.extend(self.rows.iter().cloned());
        existing.save(path)
    }

    /// Fixed-width text table, one line per row.
    pub fn render_table(&self) -> String {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        let header = [
            "family", "algorithm", "params", "budget", "t_f_ms", "t_v_ms", "verified", "related", "pgr", "error",
        ];
        let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            lines.push(vec![
                r.family.clone(),
                r.algorithm.clone(),
                compact(&r.params),
                r.budget.map_or("-".into(), |b| b.to_string()),
                format!("{:.2}", r.t_f_ms),
                format!("{:.2}", r.t_v_ms),
                r.verified.to_string(),
                r.related.to_string(),
                f(r.pgr),
                r.error.clone().unwrap_or_default(),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{} → {}\n", self.source, self.target);
        for l in &lines {
            let cells: Vec<String> = l.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
        }
        let flag = |v: Option<bool>| v.map_or("n/a", |b| if b { "yes" } else { "NO" });
        writeln!(out, "batch LinkSets agree: {}", flag(self.batch_links_agree)).unwrap();
        writeln!(out, "oracle agrees: {}", flag(self.oracle_agrees)).unwrap();
        out
    }
}

/// `key=value` pairs of a JSON object.
fn compact(v: &Value) -> String {
    match v {
        Value::Object(m) if m.is_empty() => "-".into(),
        Value::Object(m) => m
            .iter()
            .map(|(k, v)| format!("{k}={}", super::docs::plain(v)))
            .collect::<Vec<_>>()
            .join(","),
        other => other.to_string(),
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub source: DatasetDescriptor,
    pub target: DatasetDescriptor,
    pub batch: Vec<Algorithm>,
    pub params: Params,
    pub progressive: Vec<ProgressiveAlgorithm>,
    pub weighting: Weighting,
    pub tile_order: TileOrder,
    /// Budgets as fractions of the candidate pairs.
    pub budget_fractions: Vec<f64>,
    pub repetitions: usize,
    /// Run every configuration once more up front and discard it.
    pub warm_up: bool,
    pub oracle_cap: u64,
}

impl SuiteConfig {
    pub fn new(source: DatasetDescriptor, target: DatasetDescriptor) -> Self {
        SuiteConfig {
            source,
            target,
            batch: Vec::new(),
            params: Params::default(),
            progressive: Vec::new(),
            weighting: Weighting::atomic(crate::progressive::Scheme::Js),
            tile_order: TileOrder::default(),
            budget_fractions: default_budget_fractions(),
            repetitions: 5,
            warm_up: true,
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

/// 0.05, 0.10, …, 0.50.
pub fn default_budget_fractions() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 20.0).collect()
}

/// Runs `f` once to warm up (optionally) and `reps` more times; returns the
/// last outcome and the mean timings.
fn measure<T>(
    reps: usize,
    warm_up: bool,
    mut f: impl FnMut() -> Result<(T, RunTimings)>,
) -> Result<(T, f64, f64)> {
    if warm_up {
        f()?;
    }
    let (mut tf, mut tv) = (Duration::ZERO, Duration::ZERO);
    let mut last = None;
    for _ in 0..reps {
        let (out, t) = f()?;
        tf += t.filtering;
        tv += t.verification;
        last = Some(out);
    }
    let n = reps as f64;
    Ok((
        last.expect("at least one repetition"),
        tf.as_secs_f64() * 1e3 / n,
        tv.as_secs_f64() * 1e3 / n,
    ))
}

/// Runs every configured algorithm over the dataset pair. A failing
/// configuration becomes a row with `error` set; the suite goes on.
pub fn run_benchmark(cfg: &SuiteConfig) -> Result<BenchmarkReport> {
    if cfg.batch.is_empty() && cfg.progressive.is_empty() {
        return Err(Error::Config("select at least one algorithm".into()));
    }
    if cfg.repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    if cfg.budget_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::Config("budget fractions must lie in (0, 1]".into()));
    }
    let (sp, _) = read_dataset(&cfg.source)?;
    let (tp, _) = read_dataset(&cfg.target)?;
    let source: Vec<Geometry> = sp.into_iter().map(|p| p.geometry).collect();
    let target: Vec<Geometry> = tp.into_iter().map(|p| p.geometry).collect();
    let oracle = if (source.len() as u64).saturating_mul(target.len() as u64) <= cfg.oracle_cap {
        Some(brute_force_oracle_capped(&source, &target, cfg.oracle_cap)?)
    } else {
        None
    };

    let mut report = BenchmarkReport::new(
        cfg.source.path.display().to_string(),
        cfg.target.path.display().to_string(),
    );
    for &a in &cfg.batch {
        let params = cfg.params.relevant(a);
        let run = measure(cfg.repetitions, cfg.warm_up, || {
            let r = interlink(&cfg.source, &cfg.target, a, &cfg.params)?;
            Ok((r.links, r.timings))
        });
        report.rows.push(match run {
            Ok((links, t_f_ms, t_v_ms)) => {
                let mut row = BenchRow {
                    family: "batch".into(),
                    algorithm: a.name().into(),
                    params,
                    repetitions: cfg.repetitions,
                    t_f_ms,
                    t_v_ms,
                    links_hash: Some(links_hash(&links)),
                    ..Default::default()
                };
                row.fill(&links);
                row
            }
            Err(e) => BenchRow::failed("batch", a.name(), params, &e),
        });
    }
    let hashes: Vec<&String> = report.rows.iter().filter_map(|r| r.links_hash.as_ref()).collect();
    if !hashes.is_empty() {
        report.batch_links_agree = Some(hashes.windows(2).all(|w| w[0] == w[1]));
        if let Some(o) = &oracle {
            let h = links_hash(o);
            report.oracle_agrees = Some(hashes.iter().all(|x| **x == h));
        }
    }

    if !cfg.progressive.is_empty() {
        let truth = match oracle {
            Some(o) => o,
            None => interlink_geometries(&source, &target, Algorithm::Giant, &Params::default())?.0,
        };
        // every MBR-intersecting pair is a candidate
        let total = truth.verified();
        for &a in &cfg.progressive {
            for &f in &cfg.budget_fractions {
                let budget = ((f * total as f64).round() as u64).max(1);
                let pc = ProgressiveConfig {
                    algorithm: a,
                    weighting: cfg.weighting,
                    budget,
                    tile_order: cfg.tile_order,
                };
                let params = progressive_params(&pc);
                let run = measure(cfg.repetitions, cfg.warm_up, || {
                    let r = run_progressive(&source, &target, &pc)?;
                    let t = r.timings;
                    Ok((r, t))
                });
                report.rows.push(match run {
                    Ok((r, t_f_ms, t_v_ms)) => {
                        let mut row = BenchRow {
                            family: "progressive".into(),
                            algorithm: a.name().into(),
                            params,
                            budget: Some(budget),
                            budget_fraction: Some(f),
                            repetitions: cfg.repetitions,
                            t_f_ms,
                            t_v_ms,
                            candidates: Some(r.candidates),
                            ..Default::default()
                        };
                        row.fill(&r.links);
                        row.set_metrics(&r.metrics(truth.related(), budget));
                        row
                    }
                    Err(e) => BenchRow::failed("progressive", a.name(), params, &e),
                });
            }
        }
    }
    Ok(report)
}

/// Parameters of a progressive run, for reports.
pub fn progressive_params(pc: &ProgressiveConfig) -> Value {
    let mut v = serde_json::json!({
        "scheme": pc.weighting.primary,
        "mbro_norm": pc.weighting.mbro,
    });
    if let Some(s) = pc.weighting.secondary {
        v["secondary"] = serde_json::json!(s);
    }
    if pc.algorithm == ProgressiveAlgorithm::PRadon {
        v["tile_order"] = serde_json::json!(pc.tile_order);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_fractions() {
        let f = default_budget_fractions();
        assert_eq!(f.len(), 10);
        assert_eq!(f[0], 0.05);
        assert_eq!(f[9], 0.5);
        assert_eq!(f[2], 0.15);
    }

    #[test]
    fn means_skip_the_warm_up() {
        let mut calls = 0u32;
        let (last, tf, tv) = measure(5, true, || {
            calls += 1;
            let ms = |v: u64| Duration::from_millis(v);
            // the warm-up call is far slower and must not count
            let t = if calls == 1 {
                RunTimings {
                    filtering: ms(1000),
                    verification: ms(1000),
                }
            } else {
                RunTimings {
                    filtering: ms(calls as u64),
                    verification: ms(10),
                }
            };
            Ok((calls, t))
        })
        .unwrap();
        assert_eq!(calls, 6);
        assert_eq!(last, 6);
        assert!((tf - 4.0).abs() < 1e-9, "mean of 2..=6 ms, got {tf}");
        assert!((tv - 10.0).abs() < 1e-9);
    }

    #[test]
    fn report_round_trip_and_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let mut r = BenchmarkReport::new("a.tsv", "b.tsv");
        r.rows.push(BenchRow {
            family: "batch".into(),
            algorithm: "giant".into(),
            params: serde_json::json!({"swap": true}),
            verified: 3,
            ..Default::default()
        });
        r.append_to(&path).unwrap();
        r.append_to(&path).unwrap();
        let back = BenchmarkReport::load(&path).unwrap();
        assert_eq!(back.rows.len(), 2);
        assert_eq!(back.rows[0], r.rows[0]);
        let table = back.render_table();
        assert!(table.contains("giant"));
        assert!(table.contains("swap=true"));

        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        v["schema_version"] = serde_json::json!(99);
        std::fs::write(&path, v.to_string()).unwrap();
        assert!(BenchmarkReport::load(&path).is_err());
    }
}
