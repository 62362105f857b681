//! Benchmarking workbench: synthetic data, the brute-force oracle, benchmark
//! suites, grid search and the algorithm documentation registry.

pub mod bench;
pub mod docs;
pub mod oracle;
pub mod search;
pub mod synth;

pub use bench::{run_benchmark, BenchRow, BenchmarkReport, SuiteConfig, SCHEMA_VERSION};
pub use docs::{doc_for, registry, AlgorithmDoc, ParamDoc};
pub use oracle::{brute_force_oracle, brute_force_oracle_capped, DEFAULT_ORACLE_CAP};
pub use search::{grid_search, Objective, SearchConfig, SearchResult};
