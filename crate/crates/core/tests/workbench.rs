use std::collections::BTreeMap;
use std::path::Path;

use geolink::batch::Algorithm;
use geolink::io::DatasetDescriptor;
use geolink::progressive::ProgressiveAlgorithm;
use geolink::workbench::synth::{generate, synth_generate, Profile, SynthConfig};
use geolink::workbench::{
    brute_force_oracle, grid_search, run_benchmark, BenchmarkReport, Objective, SearchConfig, SuiteConfig,
};
use serde_json::json;

fn small(profile: Profile, seed: u64) -> SynthConfig {
    SynthConfig {
        profile,
        source_count: 150,
        target_count: 120,
        extent: 200.0,
        seed,
        ..Default::default()
    }
}

fn suite(dir: &Path) -> SuiteConfig {
    let (s, t) = synth_generate(&small(Profile::Clustered, 4), dir).unwrap();
    let mut cfg = SuiteConfig::new(DatasetDescriptor::new(s), DatasetDescriptor::new(t));
    cfg.repetitions = 2;
    cfg
}

#[test]
fn batch_suite_rows_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = suite(dir.path());
    cfg.batch = vec![Algorithm::Giant, Algorithm::PlaneSweep, Algorithm::RTree];
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(report.batch_links_agree, Some(true));
    assert_eq!(report.oracle_agrees, Some(true));
    assert!(report.rows.iter().all(|r| r.error.is_none() && r.repetitions == 2));
    assert!(report.rows[0].related > 0);
}

#[test]
fn failures_become_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = suite(dir.path());
    cfg.batch = vec![Algorithm::Pbsm, Algorithm::Giant];
    cfg.params.memory_budget = Some(10);
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows[0].error.as_deref().unwrap().contains("budget"));
    assert!(report.rows[1].error.is_none());
    assert_eq!(report.batch_links_agree, Some(true));
}

#[test]
fn progressive_suite_covers_the_budget_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = suite(dir.path());
    cfg.repetitions = 1;
    cfg.warm_up = false;
    cfg.progressive = vec![ProgressiveAlgorithm::Pg, ProgressiveAlgorithm::PRadon];
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.len(), 20);
    let fractions: Vec<f64> = report.rows[..10].iter().map(|r| r.budget_fraction.unwrap()).collect();
    assert_eq!(fractions, (1..=10).map(|k| k as f64 / 20.0).collect::<Vec<_>>());
    for r in &report.rows {
        assert!(r.verified <= r.budget.unwrap());
        let pgr = r.pgr.unwrap();
        assert!((0.0..=1.0).contains(&pgr));
    }
    // a larger budget never finds fewer links
    let pg: Vec<u64> = report.rows[..10].iter().map(|r| r.related).collect();
    assert!(pg.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn empty_selection_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = suite(dir.path());
    assert!(run_benchmark(&cfg).unwrap_err().is_config());
}

#[test]
fn report_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = suite(dir.path());
    cfg.repetitions = 1;
    cfg.batch = vec![Algorithm::Radon];
    let report = run_benchmark(&cfg).unwrap();
    let path = dir.path().join("report.json");
    report.save(&path).unwrap();
    let back = BenchmarkReport::load(&path).unwrap();
    assert_eq!(back, report);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
}

#[test]
fn rtree_capacity_sweep() {
    let (s, t) = generate(&SynthConfig {
        source_count: 3000,
        target_count: 3000,
        ..Default::default()
    });
    let mut cfg = SearchConfig::new("rtree", Objective::MinRuntime);
    cfg.repetitions = 2;
    cfg.values = BTreeMap::from([("node_capacity".to_string(), vec![json!(4), json!(16), json!(64)])]);
    let r = grid_search(&s, &t, &cfg).unwrap();
    assert_eq!(r.trials.len(), 3);
    let best = r.best_trial().unwrap();
    assert!(r.trials.iter().all(|t| best.runtime_ms <= t.runtime_ms));
    assert!(r.margin.unwrap() >= 0.0);
}

#[test]
fn pgr_objective_picks_the_highest() {
    let (s, t) = generate(&small(Profile::Clustered, 9));
    let cfg = SearchConfig::new("pg", Objective::MaxPgr);
    let r = grid_search(&s, &t, &cfg).unwrap();
    // default scheme plus the four others
    assert_eq!(r.trials.len(), 5 * 2);
    let best = r.best_trial().unwrap().pgr.unwrap();
    assert!(r.trials.iter().all(|t| t.pgr.unwrap() <= best));
}

#[test]
fn search_rejects_mismatched_objective() {
    let (s, t) = generate(&small(Profile::Uniform, 1));
    let err = grid_search(&s, &t, &SearchConfig::new("giant", Objective::MaxPgr)).unwrap_err();
    assert!(err.is_config());
    let err = grid_search(&s, &t, &SearchConfig::new("parallel", Objective::MinRuntime)).unwrap_err();
    assert!(err.is_config());
}

#[test]
fn clustered_data_is_denser_in_links() {
    let rate = |profile| {
        let (s, t) = generate(&SynthConfig {
            profile,
            ..Default::default()
        });
        let links = brute_force_oracle(&s, &t).unwrap();
        links.related() as f64 / (s.len() * t.len()) as f64
    };
    let (u, c) = (rate(Profile::Uniform), rate(Profile::Clustered));
    assert!(u > 0.0);
    assert!(c >= 5.0 * u, "clustered {c} vs uniform {u}");
}
