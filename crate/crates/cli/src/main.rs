use std::collections::BTreeMap;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geolink::batch::{self, Algorithm, LinkSet, Params};
use geolink::io::{read_dataset, write_links_to, Column, DatasetDescriptor, Format, LinkTriple, SkipReport};
use geolink::parallel::{self, ParallelMode, DEFAULT_MACRO_GRID};
use geolink::progressive::{
    self, write_trace, MbroNorm, ProgressiveAlgorithm, ProgressiveConfig, Scheme, TileOrder, Weighting,
};
use geolink::sweep::{parse_partitions, StripeStorage, SweepStructure};
use geolink::workbench::bench::{default_budget_fractions, progressive_params};
use geolink::workbench::docs::{plain, registry};
use geolink::workbench::synth::{synth_generate, Profile, SynthConfig};
use geolink::workbench::{
    doc_for, grid_search, run_benchmark, BenchRow, BenchmarkReport, Objective, SearchConfig, SuiteConfig,
    DEFAULT_ORACLE_CAP,
};
use geolink::{Error, Result};

#[derive(Parser)]
#[command(name = "geolink", version, about = "Computes every positive DE-9IM relation between two geometry datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Budget-agnostic interlinking: finds every related pair
    Interlink(InterlinkArgs),
    /// Budget-aware interlinking: verifies the most promising pairs first
    Progressive(ProgressiveArgs),
    /// Multi-worker interlinking over Equigrid partitions
    Parallel(ParallelArgs),
    /// Benchmarks several algorithms on one dataset pair
    Bench(BenchArgs),
    /// Finds the best configuration of one algorithm
    GridSearch(GridSearchArgs),
    /// Generates a synthetic dataset pair
    Synth(SynthArgs),
    /// Prints a benchmark report
    Report(ReportArgs),
    /// Describes an algorithm and its parameters
    Inspect(InspectArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Source dataset: CSV/TSV with a WKT column, or GeoJSON
    #[arg(long, short)]
    source: PathBuf,
    /// Target dataset
    #[arg(long, short)]
    target: PathBuf,
    /// Input format (csv, tsv, geojson); guessed from the extension by default
    #[arg(long)]
    input_format: Option<Format>,
    /// Field delimiter of delimited files
    #[arg(long)]
    delimiter: Option<char>,
    /// Zero-based WKT column; the first WKT-looking field by default
    #[arg(long)]
    geometry_column: Option<usize>,
    /// Zero-based id column, or `none`
    #[arg(long)]
    id_column: Option<String>,
    /// Delimited files start with a header row
    #[arg(long)]
    header: bool,
}

impl DataArgs {
    fn descriptor(&self, path: &Path) -> Result<DatasetDescriptor> {
        let mut d = DatasetDescriptor::new(path);
        if let Some(f) = self.input_format {
            d = d.with_format(f);
        }
        if let Some(c) = self.delimiter {
            d.delimiter = u8::try_from(c)
                .ok()
                .filter(u8::is_ascii)
                .ok_or_else(|| Error::Config(format!("the delimiter must be one ASCII character, got `{c}`")))?;
        }
        if let Some(i) = self.geometry_column {
            d.geometry_column = Column::Index(i);
        }
        d.id_column = match self.id_column.as_deref() {
            None => Column::Auto,
            Some("none") => Column::None,
            Some(v) => Column::Index(
                v.parse()
                    .map_err(|_| Error::Config(format!("--id-column expects an index or `none`, got `{v}`")))?,
            ),
        };
        d.has_header = self.header;
        Ok(d)
    }

    fn source(&self) -> Result<DatasetDescriptor> {
        self.descriptor(&self.source)
    }

    fn target(&self) -> Result<DatasetDescriptor> {
        self.descriptor(&self.target)
    }
}

#[derive(Args)]
struct BatchFlags {
    /// Tile size of the static grid variants, `S` or `WxH`
    #[arg(long)]
    tile_size: Option<String>,
    /// Plane sweep active-set structure (list, striped)
    #[arg(long)]
    sweep_structure: Option<SweepStructure>,
    /// PBSM partitions, `NxM`
    #[arg(long)]
    partitions: Option<String>,
    /// Stripe Sweep storage (map, str)
    #[arg(long)]
    stripe_storage: Option<StripeStorage>,
    /// Tree node capacity
    #[arg(long)]
    node_capacity: Option<usize>,
    /// CR-tree bits per quantized coordinate (4, 8, 16)
    #[arg(long)]
    quant_bits: Option<u32>,
    /// Byte budget of memory-intensive algorithms
    #[arg(long)]
    memory_budget: Option<u64>,
    /// Always index the source, even when the target is smaller
    #[arg(long)]
    no_swap: bool,
    /// Verification threads
    #[arg(long)]
    threads: Option<usize>,
}

impl BatchFlags {
    fn params(&self) -> Result<Params> {
        let mut p = Params::default();
        if let Some(t) = &self.tile_size {
            p.static_tile = match t.split_once(['x', 'X']) {
                Some((w, h)) => (number(w)?, number(h)?),
                None => {
                    let s = number(t)?;
                    (s, s)
                }
            };
        }
        if let Some(s) = self.sweep_structure {
            p.sweep_structure = s;
        }
        if let Some(s) = &self.partitions {
            p.pbsm_partitions = parse_partitions(s)?;
        }
        if let Some(s) = self.stripe_storage {
            p.stripe_storage = s;
        }
        if let Some(n) = self.node_capacity {
            p.node_capacity = n;
        }
        if let Some(b) = self.quant_bits {
            p.quant_bits = b;
        }
        p.memory_budget = self.memory_budget;
        p.swap = !self.no_swap;
        if let Some(t) = self.threads {
            p.threads = t;
        }
        Ok(p)
    }
}

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("expected a number, got `{s}`")))
}

#[derive(Args)]
struct ProgressiveFlags {
    /// Maximum verifications; a value below 1 is a fraction of the candidate pairs
    #[arg(long, default_value_t = 0.1)]
    budget: f64,
    /// Weighting scheme (cf, js, x2, mbro, isp)
    #[arg(long, default_value = "js")]
    scheme: Scheme,
    /// Tie-breaking scheme of a composite weighting
    #[arg(long)]
    secondary: Option<Scheme>,
    /// MBRO normalization (jaccard, min-area)
    #[arg(long, default_value = "jaccard")]
    mbro_norm: MbroNorm,
    /// Progressive RADON tile order (dec, inc)
    #[arg(long, default_value = "dec")]
    tile_order: TileOrder,
}

impl ProgressiveFlags {
    fn weighting(&self) -> Result<Weighting> {
        let mut w = match self.secondary {
            Some(s) => Weighting::composite(self.scheme, s)?,
            None => Weighting::atomic(self.scheme),
        };
        w.mbro = self.mbro_norm;
        Ok(w)
    }

    /// Resolves a fractional budget against the number of candidate pairs.
    fn config(&self, algorithm: ProgressiveAlgorithm, candidates: impl FnOnce() -> Result<u64>) -> Result<ProgressiveConfig> {
        let b = self.budget;
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::Config(format!("the budget must be positive, got {b}")));
        }
        let budget = if b < 1.0 {
            ((b * candidates()? as f64).round() as u64).max(1)
        } else {
            b.round() as u64
        };
        Ok(ProgressiveConfig {
            algorithm,
            weighting: self.weighting()?,
            budget,
            tile_order: self.tile_order,
        })
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write `source<TAB>relation<TAB>target` lines here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Append a row to this JSON benchmark report
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct InterlinkArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Batch algorithm (see `geolink inspect`)
    #[arg(long, short, default_value = "giant")]
    algorithm: Algorithm,
    #[command(flatten)]
    flags: BatchFlags,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ProgressiveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Budget-aware algorithm (pg, dpg, lpg, gog, ipg, pradon)
    #[arg(long, short, default_value = "pg")]
    algorithm: ProgressiveAlgorithm,
    #[command(flatten)]
    flags: ProgressiveFlags,
    /// Write the verification trace (step, source, target, related) here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also run a full batch pass to report precision, recall and PGR
    #[arg(long)]
    metrics: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ParallelArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Worker threads (default: available cores)
    #[arg(long, short)]
    workers: Option<usize>,
    /// Equigrid tiles merged per partition, `NxM`
    #[arg(long, default_value_t = format!("{}x{}", DEFAULT_MACRO_GRID.0, DEFAULT_MACRO_GRID.1))]
    macro_grid: String,
    /// Run this budget-aware algorithm per partition instead of a batch join
    #[arg(long)]
    progressive: Option<ProgressiveAlgorithm>,
    #[command(flatten)]
    flags: ProgressiveFlags,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Batch algorithms, comma-separated (default: all)
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Budget-aware algorithms, comma-separated
    #[arg(long, value_delimiter = ',')]
    progressive: Vec<ProgressiveAlgorithm>,
    /// Progressive budgets as fractions of the candidate pairs (default 0.05..0.50)
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<f64>>,
    #[command(flatten)]
    flags: BatchFlags,
    #[command(flatten)]
    weighting: ProgressiveFlags,
    /// Measured runs per configuration (timings are their mean)
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Skip the discarded warm-up run
    #[arg(long)]
    no_warm_up: bool,
    /// Largest |S|·|T| checked against the brute-force oracle
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    oracle_cap: u64,
    /// Append the rows to this JSON report
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
}

#[derive(Args)]
struct GridSearchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Algorithm to tune
    #[arg(long, short)]
    algorithm: String,
    /// min_runtime or max_pgr
    #[arg(long, default_value = "min_runtime")]
    objective: Objective,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Budget of budget-aware algorithms, as a fraction of the candidate pairs
    #[arg(long, default_value_t = 0.1)]
    budget_fraction: f64,
    /// Explicit values for a parameter, `name=v1,v2,...` (repeatable)
    #[arg(long = "values")]
    values: Vec<String>,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
}

#[derive(Args)]
struct SynthArgs {
    /// uniform, clustered or skewed
    #[arg(long, default_value = "uniform")]
    profile: Profile,
    #[arg(long, default_value_t = 1000)]
    source_count: usize,
    #[arg(long, default_value_t = 1000)]
    target_count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Side of the square extent
    #[arg(long, default_value_t = 1000.0)]
    extent: f64,
    /// Typical geometry radius
    #[arg(long, default_value_t = 5.0)]
    mean_size: f64,
    /// Share of LineStrings
    #[arg(long, default_value_t = 0.5)]
    line_fraction: f64,
    /// Share of Polygons with a hole
    #[arg(long, default_value_t = 0.1)]
    hole_fraction: f64,
    /// Cluster centres of the clustered profile
    #[arg(long, default_value_t = 8)]
    clusters: usize,
    /// Cluster radius as a share of the extent
    #[arg(long, default_value_t = 0.02)]
    cluster_spread: f64,
    /// Stretch each geometry along a random axis by this factor
    #[arg(long, default_value_t = 1.0)]
    elongation: f64,
    /// Snap coordinates to this grid step
    #[arg(long)]
    snap: Option<f64>,
    /// Directory receiving source.tsv and target.tsv
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Args)]
struct ReportArgs {
    /// Report written by `bench` or `--report`
    file: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum DocFormat {
    Text,
    Json,
}

#[derive(Args)]
struct InspectArgs {
    /// Algorithm to describe; lists all when omitted
    name: Option<String>,
    #[command(flatten)]
    flags: BatchFlags,
    #[command(flatten)]
    progressive: ProgressiveFlags,
    #[arg(long, value_enum, default_value = "text")]
    format: DocFormat,
}

fn warn_skips(path: &Path, s: &SkipReport) {
    if s.total() > 0 {
        log::warn!("{}: skipped {} records", path.display(), s.total());
        for sample in &s.samples {
            log::warn!("  {sample}");
        }
    }
    if s.degenerate > 0 {
        log::warn!("{}: {} degenerate geometries cannot be verified", path.display(), s.degenerate);
    }
}

/// Output labels of a dataset, by dense id.
fn load(d: &DatasetDescriptor) -> Result<(Vec<geolink::geometry::Geometry>, Vec<String>)> {
    let (profiles, skips) = read_dataset(d)?;
    warn_skips(&d.path, &skips);
    let labels = profiles.iter().map(|p| p.label()).collect();
    Ok((profiles.into_iter().map(|p| p.geometry).collect(), labels))
}

fn write_triples(triples: Vec<LinkTriple>, output: Option<&Path>) -> Result<u64> {
    match output {
        Some(path) => geolink::io::write_links(triples, path),
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            let n = write_links_to(triples, &mut out)?;
            out.flush()?;
            Ok(n)
        }
    }
}

fn labeled(links: &LinkSet, s: &[String], t: &[String]) -> Vec<LinkTriple> {
    let mut v: Vec<LinkTriple> = links
        .links()
        .iter()
        .flat_map(|l| {
            l.relations.iter().map(move |relation| LinkTriple {
                source: s[l.source as usize].clone(),
                relation,
                target: t[l.target as usize].clone(),
            })
        })
        .collect();
    v.sort();
    v
}

fn append_row(path: Option<&PathBuf>, data: &DataArgs, row: BenchRow) -> Result<()> {
    if let Some(path) = path {
        let mut r = BenchmarkReport::new(data.source.display().to_string(), data.target.display().to_string());
        r.rows.push(row);
        r.append_to(path)?;
    }
    Ok(())
}

fn interlink(a: InterlinkArgs) -> Result<()> {
    let params = a.flags.params()?;
    let run = batch::interlink(&a.data.source()?, &a.data.target()?, a.algorithm, &params)?;
    warn_skips(&a.data.source, &run.source_skips);
    warn_skips(&a.data.target, &run.target_skips);
    let n = write_triples(run.triples(), a.out.output.as_deref())?;
    eprintln!(
        "{}: {} triples, {} pairs verified, {} related, t_f {:.1} ms, t_v {:.1} ms",
        a.algorithm,
        n,
        run.links.verified(),
        run.links.related(),
        run.timings.t_f_ms(),
        run.timings.t_v_ms()
    );
    append_row(a.out.report.as_ref(), &a.data, run.report().into())
}

fn candidates(source: &[geolink::geometry::Geometry], target: &[geolink::geometry::Geometry]) -> Result<u64> {
    let mut n = 0;
    batch::candidate_pairs(source, target, Algorithm::Giant, &Params::default(), &mut |_, _| n += 1)?;
    Ok(n)
}

fn progressive_cmd(a: ProgressiveArgs) -> Result<()> {
    let (s, sl) = load(&a.data.source()?)?;
    let (t, tl) = load(&a.data.target()?)?;
    let cfg = a.flags.config(a.algorithm, || candidates(&s, &t))?;
    let run = progressive::run_progressive(&s, &t, &cfg)?;
    if let Some(path) = &a.trace {
        write_trace(&run.trace, path)?;
    }
    let n = write_triples(labeled(&run.links, &sl, &tl), a.out.output.as_deref())?;
    let mut row = BenchRow {
        family: "progressive".into(),
        algorithm: a.algorithm.name().into(),
        params: progressive_params(&cfg),
        budget: Some(cfg.budget),
        repetitions: 1,
        t_f_ms: run.timings.t_f_ms(),
        t_v_ms: run.timings.t_v_ms(),
        verified: run.links.verified(),
        related: run.links.related(),
        candidates: Some(run.candidates),
        per_relation_counts: run.links.per_relation_counts().into_iter().map(|(k, v)| (k.into(), v)).collect(),
        ..Default::default()
    };
    if a.metrics {
        let (truth, _) = batch::interlink_geometries(&s, &t, Algorithm::Giant, &Params::default())?;
        let m = run.metrics(truth.related(), cfg.budget);
        row.set_metrics(&m);
        eprintln!("precision {:.4}, recall {:.4}, PGR {:.4}", m.precision, m.recall, m.pgr);
    }
    eprintln!(
        "{}: budget {} of {} candidates, {} verified, {} related, {} triples",
        a.algorithm,
        cfg.budget,
        run.candidates,
        run.links.verified(),
        run.links.related(),
        n
    );
    append_row(a.out.report.as_ref(), &a.data, row)
}

fn parallel_cmd(a: ParallelArgs) -> Result<()> {
    let workers = match a.workers {
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let macro_grid = parse_partitions(&a.macro_grid)?;
    let (s, sl) = load(&a.data.source()?)?;
    let (t, tl) = load(&a.data.target()?)?;
    let mode = match a.progressive {
        Some(alg) => ParallelMode::Progressive(a.flags.config(alg, || candidates(&s, &t))?),
        None => ParallelMode::Batch,
    };
    let run = parallel::parallel_interlink(&s, &t, workers, macro_grid, &mode)?;
    let n = write_triples(labeled(&run.links, &sl, &tl), a.out.output.as_deref())?;
    eprintln!(
        "{} workers, {} partitions, {} units: {} triples, {} verified, {} related, t_f {:.1} ms, t_v {:.1} ms",
        workers,
        run.partitions,
        run.units.len(),
        n,
        run.links.verified(),
        run.links.related(),
        run.timings.t_f_ms(),
        run.timings.t_v_ms()
    );
    if let Some(skew) = run.skew() {
        eprintln!("unit candidates: max {}, min {}", skew.max_candidates, skew.min_candidates);
    }
    let (algorithm, mut params, budget) = match &mode {
        ParallelMode::Batch => ("batch".to_string(), serde_json::json!({}), None),
        ParallelMode::Progressive(c) => (c.algorithm.name().to_string(), progressive_params(c), Some(c.budget)),
    };
    params["workers"] = workers.into();
    params["macro_grid"] = a.macro_grid.clone().into();
    let row = BenchRow {
        family: "parallel".into(),
        algorithm,
        params,
        budget,
        repetitions: 1,
        t_f_ms: run.timings.t_f_ms(),
        t_v_ms: run.timings.t_v_ms(),
        verified: run.links.verified(),
        related: run.links.related(),
        candidates: Some(run.candidates),
        per_relation_counts: run.links.per_relation_counts().into_iter().map(|(k, v)| (k.into(), v)).collect(),
        ..Default::default()
    };
    append_row(a.out.report.as_ref(), &a.data, row)
}

fn print_report(r: &BenchmarkReport, format: ReportFormat) {
    match format {
        ReportFormat::Table => print!("{}", r.render_table()),
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(r).expect("report serializes")),
    }
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut cfg = SuiteConfig::new(a.data.source()?, a.data.target()?);
    cfg.batch = a.algorithms.unwrap_or_else(|| Algorithm::ALL.to_vec());
    cfg.progressive = a.progressive;
    cfg.params = a.flags.params()?;
    cfg.weighting = a.weighting.weighting()?;
    cfg.tile_order = a.weighting.tile_order;
    cfg.budget_fractions = a.budgets.unwrap_or_else(default_budget_fractions);
    cfg.repetitions = a.repetitions;
    cfg.warm_up = !a.no_warm_up;
    cfg.oracle_cap = a.oracle_cap;
    let report = run_benchmark(&cfg)?;
    if let Some(path) = &a.output {
        report.append_to(path)?;
    }
    print_report(&report, a.format);
    Ok(())
}

fn parse_values(specs: &[String]) -> Result<BTreeMap<String, Vec<serde_json::Value>>> {
    specs
        .iter()
        .map(|s| {
            let (name, list) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--values expects name=v1,v2,..., got `{s}`")))?;
            let values = list
                .split(',')
                .map(|v| {
                    let v = v.trim();
                    // numbers stay numbers, everything else is a string
                    serde_json::from_str::<serde_json::Value>(v)
                        .ok()
                        .filter(|x| x.is_number())
                        .unwrap_or_else(|| v.into())
                })
                .collect();
            Ok((name.trim().to_string(), values))
        })
        .collect()
}

fn grid_search_cmd(a: GridSearchArgs) -> Result<()> {
    let mut cfg = SearchConfig::new(a.algorithm.clone(), a.objective);
    cfg.repetitions = a.repetitions;
    cfg.budget_fraction = a.budget_fraction;
    cfg.values = parse_values(&a.values)?;
    doc_for(&a.algorithm)?;
    let (s, _) = load(&a.data.source()?)?;
    let (t, _) = load(&a.data.target()?)?;
    let result = grid_search(&s, &t, &cfg)?;
    match a.format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&result).expect("result serializes")),
        ReportFormat::Table => {
            for (i, tr) in result.trials.iter().enumerate() {
                let mark = if Some(i) == result.best { "*" } else { " " };
                let conf = match &tr.configuration {
                    serde_json::Value::Object(m) if !m.is_empty() => m
                        .iter()
                        .map(|(k, v)| format!("{k}={}", plain(v)))
                        .collect::<Vec<_>>()
                        .join(","),
                    _ => "defaults".into(),
                };
                let pgr = tr.pgr.map_or(String::new(), |p| format!("  pgr {p:.4}"));
                match &tr.error {
                    Some(e) => println!("{mark} {conf}  error: {e}"),
                    None => println!("{mark} {conf}  {:.2} ms{pgr}", tr.runtime_ms),
                }
            }
            if let Some(m) = result.margin {
                println!("margin over runner-up: {:.1}%", m * 100.0);
            }
        }
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        profile: a.profile,
        source_count: a.source_count,
        target_count: a.target_count,
        seed: a.seed,
        extent: a.extent,
        mean_size: a.mean_size,
        line_fraction: a.line_fraction,
        hole_fraction: a.hole_fraction,
        clusters: a.clusters,
        cluster_spread: a.cluster_spread,
        snap: a.snap,
        elongation: a.elongation,
        ..Default::default()
    };
    if !(cfg.extent > 0.0 && cfg.mean_size > 0.0 && cfg.elongation > 0.0) {
        return Err(Error::Config("extent, mean size and elongation must be positive".into()));
    }
    let (s, t) = synth_generate(&cfg, &a.out)?;
    eprintln!("wrote {} and {}", s.display(), t.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    print_report(&BenchmarkReport::load(&a.file)?, a.format);
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let Some(name) = a.name else {
        for d in registry() {
            println!("{:<14} {:<12} {}", d.name, d.family, d.summary);
        }
        return Ok(());
    };
    let mut doc = doc_for(&name)?;
    if let Ok(alg) = name.parse::<Algorithm>() {
        let params = a.flags.params()?;
        params.validate(alg)?;
        doc = doc.with_configuration(params.relevant(alg));
    } else if let Ok(alg) = name.parse::<ProgressiveAlgorithm>() {
        let cfg = ProgressiveConfig {
            algorithm: alg,
            weighting: a.progressive.weighting()?,
            budget: 1,
            tile_order: a.progressive.tile_order,
        };
        let mut conf = progressive_params(&cfg);
        conf["budget"] = a.progressive.budget.into();
        doc = doc.with_configuration(conf);
    }
    match a.format {
        DocFormat::Text => print!("{doc}"),
        DocFormat::Json => println!("{}", serde_json::to_string_pretty(&doc).expect("doc serializes")),
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Interlink(a) => interlink(a),
        Command::Progressive(a) => progressive_cmd(a),
        Command::Parallel(a) => parallel_cmd(a),
        Command::Bench(a) => bench(a),
        Command::GridSearch(a) => grid_search_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
        Command::Inspect(a) => inspect(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Write(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
