//! Command-line front end. Five subcommands — `train`, `predict`, `bench`,
//! `retention`, `prob` — all emitting an optional JSON run report
//! (`schemas/run_report.schema.json`) that carries every seed and parameter
//! needed to reproduce the run. Flags mirror LibSVM naming where a
//! counterpart exists (`--cost`, `--gamma`).
//!
//! Exit codes: 0 success, 2 usage, 3 data parse, 4 configuration,
//! 5 training, 6 I/O.

use crate::analysis::{
    census, denominator_inequality, measure_retention, retention_prob_balanced,
    retention_prob_random, RetentionCensus, RetentionRun,
};
use crate::cascade::{
    run_cascade_opts, CascadeOptions, CascadePlan, LayerReport, MergeKind, PartitionKind,
};
use crate::dataset::Dataset;
use crate::error::Error;
use crate::kernel::KernelSpec;
use crate::solver::{smo_train, smo_train_detailed, SolverConfig, SvmModel};
use crate::Result;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "bcsvm",
    version,
    about = "Cascade and balanced-cascade SVM training, benchmarking, and retention analysis"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a model, directly or through a cascade
    Train(TrainArgs),
    /// Predict labels for a test file with a saved model
    Predict(PredictArgs),
    /// Compare direct, csvm, and bcsvm training over a list of seeds
    Bench(BenchArgs),
    /// Measure how much of the direct model's SV set survives a cascade
    Retention(RetentionArgs),
    /// Exact retention probabilities for a census of SV/noise/common counts
    Prob(ProbArgs),
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
    Poly,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionArg {
    Random,
    Balanced,
}

impl From<PartitionArg> for PartitionKind {
    fn from(p: PartitionArg) -> Self {
        match p {
            PartitionArg::Random => PartitionKind::Random,
            PartitionArg::Balanced => PartitionKind::Balanced,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MergeArg {
    Pooled,
    Pairwise,
}

impl From<MergeArg> for MergeKind {
    fn from(m: MergeArg) -> Self {
        match m {
            MergeArg::Pooled => MergeKind::Pooled,
            MergeArg::Pairwise => MergeKind::Pairwise,
        }
    }
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Kernel type
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    kernel: KernelArg,
    /// Kernel coefficient for rbf/poly; defaults to 1/dim
    #[arg(long)]
    gamma: Option<f64>,
    /// Polynomial degree
    #[arg(long, default_value_t = 3)]
    degree: u32,
    /// Polynomial constant term
    #[arg(long, default_value_t = 0.0)]
    coef0: f64,
    /// Soft-margin penalty C
    #[arg(long, default_value_t = 1.0)]
    cost: f64,
    /// KKT violation tolerance at termination
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Cap on solver iterations per training
    #[arg(long, default_value_t = 10_000_000)]
    max_iter: u64,
    /// Kernel row cache per training, in megabytes
    #[arg(long, env = "BCSVM_CACHE_MB", default_value_t = 100)]
    cache_mb: usize,
}

impl SolverFlags {
    /// Builds the solver config, defaulting gamma to 1/dim like LibSVM.
    fn config(&self, dim: u32) -> Result<SolverConfig> {
        let gamma = self.gamma.unwrap_or(if dim == 0 { 1.0 } else { 1.0 / f64::from(dim) });
        let kernel = match self.kernel {
            KernelArg::Linear => KernelSpec::Linear,
            KernelArg::Rbf => KernelSpec::Rbf { gamma },
            KernelArg::Poly => {
                KernelSpec::Poly { gamma, degree: self.degree, coef0: self.coef0 }
            }
        };
        let cfg = SolverConfig {
            c: self.cost,
            tol: self.tol,
            max_iter: self.max_iter,
            cache_mb: self.cache_mb,
            kernel,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training data in LIBSVM format
    #[arg(long)]
    data: PathBuf,
    /// Treat 0/1 labels as -1/+1
    #[arg(long)]
    remap_01: bool,
    #[command(flatten)]
    solver: SolverFlags,
    /// Group count per layer, e.g. 8,1; a single 1 trains directly
    #[arg(long, value_delimiter = ',', default_value = "1")]
    layers: Vec<usize>,
    #[arg(long, value_enum, default_value_t = PartitionArg::Balanced)]
    partition: PartitionArg,
    #[arg(long, value_enum, default_value_t = MergeArg::Pooled)]
    merge: MergeArg,
    /// Subset-training threads; defaults to every core
    #[arg(long)]
    workers: Option<usize>,
    /// Keep going when a subset hits max_iter
    #[arg(long)]
    allow_nonconverged: bool,
    /// Partition seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the model
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// Optional test file; prints accuracy when given
    #[arg(long)]
    test: Option<PathBuf>,
    /// Optional JSON run report
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Saved model file
    #[arg(long)]
    model: PathBuf,
    /// Test data in LIBSVM format
    #[arg(long)]
    data: PathBuf,
    /// Treat 0/1 labels as -1/+1
    #[arg(long)]
    remap_01: bool,
    /// Predictions file, one label per line; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    /// Optional JSON run report
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Training data in LIBSVM format
    #[arg(long)]
    data: PathBuf,
    /// Test data for accuracy measurement
    #[arg(long)]
    test: PathBuf,
    /// Treat 0/1 labels as -1/+1
    #[arg(long)]
    remap_01: bool,
    #[command(flatten)]
    solver: SolverFlags,
    /// Cascade layer plan shared by csvm and bcsvm
    #[arg(long, value_delimiter = ',', default_value = "8,1")]
    layers: Vec<usize>,
    #[arg(long, value_enum, default_value_t = MergeArg::Pooled)]
    merge: MergeArg,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    allow_nonconverged: bool,
    /// Comma-separated seeds; one shuffle + three trainings per seed
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// CSV output (method,seed,accuracy,sv_count,train_seconds)
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RetentionArgs {
    /// Training data in LIBSVM format
    #[arg(long)]
    data: PathBuf,
    /// Treat 0/1 labels as -1/+1
    #[arg(long)]
    remap_01: bool,
    #[command(flatten)]
    solver: SolverFlags,
    /// Cascade layer plan; both partition modes run with it
    #[arg(long, value_delimiter = ',', default_value = "8,1")]
    layers: Vec<usize>,
    #[arg(long, value_enum, default_value_t = MergeArg::Pooled)]
    merge: MergeArg,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ProbArgs {
    /// Positive / negative support-vector counts
    #[arg(long, default_value_t = 0)]
    psv: u64,
    #[arg(long, default_value_t = 0)]
    nsv: u64,
    /// Positive / negative noise counts
    #[arg(long, default_value_t = 0)]
    pn: u64,
    #[arg(long, default_value_t = 0)]
    nn: u64,
    /// Positive / negative common counts
    #[arg(long, default_value_t = 0)]
    pds: u64,
    #[arg(long, default_value_t = 0)]
    nds: u64,
    /// Number of groups
    #[arg(long)]
    m: u64,
    /// Derive the census by training on this file instead of taking counts
    #[arg(long)]
    from_data: Option<PathBuf>,
    /// Treat 0/1 labels as -1/+1 (with --from-data)
    #[arg(long)]
    remap_01: bool,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    report: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Run report

#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub argv: Vec<String>,
    pub dataset: Option<DatasetStats>,
    pub config: Option<ConfigEcho>,
    pub layers: Option<Vec<LayerReport>>,
    pub model: Option<ModelSummary>,
    pub accuracy: Option<f64>,
    pub bench: Option<BenchReport>,
    pub retention: Option<RetentionReport>,
    pub prob: Option<ProbReport>,
    pub wall_seconds: f64,
}

impl RunReport {
    fn new(command: &str, argv: Vec<String>) -> RunReport {
        RunReport {
            schema_version: 1,
            command: command.into(),
            argv,
            dataset: None,
            config: None,
            layers: None,
            model: None,
            accuracy: None,
            bench: None,
            retention: None,
            prob: None,
            wall_seconds: 0.0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetStats {
    pub path: String,
    pub n: usize,
    pub dim: u32,
    pub positives: usize,
    pub negatives: usize,
}

impl DatasetStats {
    fn of(path: &Path, ds: &Dataset) -> DatasetStats {
        DatasetStats {
            path: path.display().to_string(),
            n: ds.len(),
            dim: ds.dim(),
            positives: ds.positive_count(),
            negatives: ds.negative_count(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub cost: f64,
    pub tol: f64,
    pub max_iter: u64,
    pub cache_mb: usize,
    pub kernel: KernelSpec,
    pub layers: Vec<usize>,
    /// None when the command runs both partition modes itself.
    pub partition: Option<PartitionKind>,
    pub merge: MergeKind,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub remap_zero_one: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSummary {
    pub path: Option<String>,
    pub sv_count: usize,
    pub bias: f64,
    pub converged: bool,
}

impl ModelSummary {
    fn of(model: &SvmModel, path: Option<&Path>) -> ModelSummary {
        ModelSummary {
            path: path.map(|p| p.display().to_string()),
            sv_count: model.sv_count(),
            bias: model.bias(),
            converged: model.is_converged(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub sv_count: Option<usize>,
    pub train_seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchAggregate {
    pub method: String,
    pub runs: usize,
    pub mean_accuracy: Option<f64>,
    pub stddev_accuracy: Option<f64>,
    /// Mean |accuracy − direct accuracy| over seeds where both succeeded.
    pub mean_abs_gap_to_direct: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RetentionReport {
    pub global_sv_count: usize,
    pub random: Vec<RetentionRun>,
    pub balanced: Vec<RetentionRun>,
    pub aggregate: RetentionAggregate,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RetentionAggregate {
    pub random_mean_layer1: f64,
    pub random_mean_final: f64,
    pub balanced_mean_layer1: f64,
    pub balanced_mean_final: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProbReport {
    pub census: RetentionCensus,
    pub random: ProbValue,
    pub balanced: ProbValue,
    /// Absent when the balanced and random group sizes disagree (m does not
    /// divide the class totals), where the comparison has no meaning.
    pub denominator: Option<DenominatorReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProbValue {
    /// Exact value, e.g. "23/66".
    pub fraction: String,
    /// Rounded to 12 decimal digits.
    pub decimal: String,
}

impl ProbValue {
    fn of(r: &BigRational) -> ProbValue {
        ProbValue { fraction: r.to_string(), decimal: decimal12(r) }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DenominatorReport {
    pub random: String,
    pub balanced: String,
    pub random_exceeds: bool,
}

/// `r` rounded half-up to 12 decimal digits, as a plain decimal string.
fn decimal12(r: &BigRational) -> String {
    let scale = BigInt::from(10u64).pow(12);
    let scaled = (r.numer() * &scale).abs();
    let den = r.denom().abs();
    let q = (scaled * 2u32 + &den) / (den * 2u32);
    let int = &q / &scale;
    let frac = (&q % &scale).to_string();
    format!("{int}.{frac:0>12}")
}

// ---------------------------------------------------------------------------
// Dispatch

/// Parses `std::env::args`, runs the chosen command, and maps failures onto
/// the documented exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let outcome = match cli.cmd {
        Cmd::Train(a) => cmd_train(a, argv),
        Cmd::Predict(a) => cmd_predict(a, argv),
        Cmd::Bench(a) => cmd_bench(a, argv),
        Cmd::Retention(a) => cmd_retention(a, argv),
        Cmd::Prob(a) => cmd_prob(a, argv),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Prefixes I/O failures with the offending path; the raw OS message alone
/// ("No such file or directory") is useless in a multi-file invocation.
fn add_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    }
}

fn load_dataset(path: &Path, remap: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| add_path(Error::Io(e), path))?;
    Dataset::parse_libsvm(&text, remap)
}

fn write_report(report: &mut RunReport, path: Option<&Path>, started: Instant) -> Result<()> {
    report.wall_seconds = started.elapsed().as_secs_f64();
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(report).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text)?;
        println!("wrote report {}", path.display());
    }
    Ok(())
}

fn cmd_train(a: TrainArgs, argv: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let ds = load_dataset(&a.data, a.remap_01)?;
    let cfg = a.solver.config(ds.dim())?;
    let plan = CascadePlan {
        layers: a.layers.clone(),
        partition: a.partition.into(),
        merge: a.merge.into(),
    };
    let opts =
        CascadeOptions { workers: a.workers, allow_nonconverged: a.allow_nonconverged };
    println!(
        "samples {} dim {} positives {} negatives {}",
        ds.len(),
        ds.dim(),
        ds.positive_count(),
        ds.negative_count()
    );

    let (model, layers) = run_cascade_opts(&ds, &plan, &cfg, a.seed, &opts)?;
    for l in &layers {
        println!("layer {} groups {} merged {}", l.layer_index, l.group_count, l.merged_size);
    }
    println!(
        "svs {} bias {} converged {}",
        model.sv_count(),
        model.bias(),
        model.is_converged()
    );
    model.save(&a.model)?;
    println!("wrote model {}", a.model.display());

    let mut report = RunReport::new("train", argv);
    report.dataset = Some(DatasetStats::of(&a.data, &ds));
    report.config = Some(ConfigEcho {
        cost: cfg.c,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        cache_mb: cfg.cache_mb,
        kernel: cfg.kernel,
        layers: a.layers,
        partition: Some(plan.partition),
        merge: plan.merge,
        workers: a.workers,
        seed: Some(a.seed),
        seeds: None,
        remap_zero_one: a.remap_01,
    });
    report.layers = Some(layers);
    report.model = Some(ModelSummary::of(&model, Some(&a.model)));
    if let Some(test_path) = &a.test {
        let test = load_dataset(test_path, a.remap_01)?;
        let acc = model.accuracy(&test)?;
        println!("accuracy {acc:.6}");
        report.accuracy = Some(acc);
    }
    write_report(&mut report, a.report.as_deref(), started)
}

fn cmd_predict(a: PredictArgs, argv: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let model = SvmModel::load(&a.model).map_err(|e| add_path(e, &a.model))?;
    let test = load_dataset(&a.data, a.remap_01)?;
    let predictions: Vec<i8> =
        test.samples().iter().map(|s| model.predict(s.features())).collect();
    let mut lines = String::new();
    for p in &predictions {
        lines.push_str(&p.to_string());
        lines.push('\n');
    }
    match &a.output {
        Some(path) => {
            std::fs::write(path, &lines)?;
            println!("wrote predictions {}", path.display());
        }
        None => print!("{lines}"),
    }
    let acc = model.accuracy(&test)?;
    let hits = predictions
        .iter()
        .zip(test.samples())
        .filter(|(p, s)| **p == s.label())
        .count();
    println!("accuracy {acc:.6} ({hits}/{})", test.len());

    let mut report = RunReport::new("predict", argv);
    report.dataset = Some(DatasetStats::of(&a.data, &test));
    report.model = Some(ModelSummary::of(&model, Some(&a.model)));
    report.accuracy = Some(acc);
    write_report(&mut report, a.report.as_deref(), started)
}

const BENCH_METHODS: [&str; 3] = ["direct", "csvm", "bcsvm"];

fn cmd_bench(a: BenchArgs, argv: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let train = load_dataset(&a.data, a.remap_01)?;
    let test = load_dataset(&a.test, a.remap_01)?;
    let cfg = a.solver.config(train.dim())?;
    let opts =
        CascadeOptions { workers: a.workers, allow_nonconverged: a.allow_nonconverged };
    let plan_for = |partition: PartitionKind| CascadePlan {
        layers: a.layers.clone(),
        partition,
        merge: a.merge.into(),
    };
    plan_for(PartitionKind::Random).validate()?;

    let mut rows = Vec::new();
    for &seed in &a.seeds {
        let shuffled = train.shuffle(seed);
        for method in BENCH_METHODS {
            let t0 = Instant::now();
            let outcome = match method {
                "direct" => smo_train(&shuffled, &cfg),
                "csvm" => {
                    run_cascade_opts(&shuffled, &plan_for(PartitionKind::Random), &cfg, seed, &opts)
                        .map(|(m, _)| m)
                }
                _ => run_cascade_opts(
                    &shuffled,
                    &plan_for(PartitionKind::Balanced),
                    &cfg,
                    seed,
                    &opts,
                )
                .map(|(m, _)| m),
            };
            let train_seconds = t0.elapsed().as_secs_f64();
            let row = match outcome.and_then(|m| m.accuracy(&test).map(|acc| (m, acc))) {
                Ok((model, accuracy)) => BenchRow {
                    method: method.into(),
                    seed,
                    accuracy: Some(accuracy),
                    sv_count: Some(model.sv_count()),
                    train_seconds: Some(train_seconds),
                    error: None,
                },
                // A failed method is a data point, not a fatal error.
                Err(e) => BenchRow {
                    method: method.into(),
                    seed,
                    accuracy: None,
                    sv_count: None,
                    train_seconds: None,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }

    let aggregates = bench_aggregates(&rows);
    for agg in &aggregates {
        match (agg.mean_accuracy, agg.stddev_accuracy) {
            (Some(mean), Some(sd)) => {
                let gap = agg
                    .mean_abs_gap_to_direct
                    .map_or(String::new(), |g| format!(" mean_gap_to_direct {g:.6}"));
                println!(
                    "{} runs {} mean_accuracy {mean:.6} stddev {sd:.6}{gap}",
                    agg.method, agg.runs
                );
            }
            _ => println!("{} runs {} (all failed)", agg.method, agg.runs),
        }
    }
    let csv = bench_csv(&rows);
    if let Some(path) = &a.csv {
        std::fs::write(path, &csv)?;
        println!("wrote csv {}", path.display());
    } else {
        print!("{csv}");
    }

    let mut report = RunReport::new("bench", argv);
    report.dataset = Some(DatasetStats::of(&a.data, &train));
    report.config = Some(ConfigEcho {
        cost: cfg.c,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        cache_mb: cfg.cache_mb,
        kernel: cfg.kernel,
        layers: a.layers,
        partition: None,
        merge: a.merge.into(),
        workers: a.workers,
        seed: None,
        seeds: Some(a.seeds),
        remap_zero_one: a.remap_01,
    });
    report.bench = Some(BenchReport { rows, aggregates });
    write_report(&mut report, a.report.as_deref(), started)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn bench_aggregates(rows: &[BenchRow]) -> Vec<BenchAggregate> {
    let acc_of = |method: &str, seed: u64| {
        rows.iter().find(|r| r.method == method && r.seed == seed).and_then(|r| r.accuracy)
    };
    BENCH_METHODS
        .iter()
        .map(|&method| {
            let accs: Vec<f64> =
                rows.iter().filter(|r| r.method == method).filter_map(|r| r.accuracy).collect();
            let gaps: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method)
                .filter_map(|r| {
                    let acc = r.accuracy?;
                    let direct = acc_of("direct", r.seed)?;
                    Some((acc - direct).abs())
                })
                .collect();
            BenchAggregate {
                method: method.into(),
                runs: accs.len(),
                mean_accuracy: (!accs.is_empty()).then(|| mean(&accs)),
                stddev_accuracy: (!accs.is_empty()).then(|| stddev(&accs)),
                mean_abs_gap_to_direct: (method != "direct" && !gaps.is_empty())
                    .then(|| mean(&gaps)),
            }
        })
        .collect()
}

/// Successful rows only; failures live in the JSON report.
fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("method,seed,accuracy,sv_count,train_seconds\n");
    for r in rows {
        if let (Some(acc), Some(svs), Some(secs)) = (r.accuracy, r.sv_count, r.train_seconds) {
            out.push_str(&format!("{},{},{},{},{:.6}\n", r.method, r.seed, acc, svs, secs));
        }
    }
    out
}

fn cmd_retention(a: RetentionArgs, argv: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let ds = load_dataset(&a.data, a.remap_01)?;
    let cfg = a.solver.config(ds.dim())?;
    let plan_for = |partition: PartitionKind| CascadePlan {
        layers: a.layers.clone(),
        partition,
        merge: a.merge.into(),
    };

    let random = measure_retention(&ds, &plan_for(PartitionKind::Random), &cfg, &a.seeds)?;
    let balanced = measure_retention(&ds, &plan_for(PartitionKind::Balanced), &cfg, &a.seeds)?;
    let mean_of = |runs: &[RetentionRun], f: fn(&RetentionRun) -> f64| {
        mean(&runs.iter().map(f).collect::<Vec<_>>())
    };
    let aggregate = RetentionAggregate {
        random_mean_layer1: mean_of(&random.runs, |r| r.layer1_fraction),
        random_mean_final: mean_of(&random.runs, |r| r.final_fraction),
        balanced_mean_layer1: mean_of(&balanced.runs, |r| r.layer1_fraction),
        balanced_mean_final: mean_of(&balanced.runs, |r| r.final_fraction),
    };
    println!("global_svs {}", random.global_sv_ids.len());
    println!(
        "random mean_layer1 {:.6} mean_final {:.6}",
        aggregate.random_mean_layer1, aggregate.random_mean_final
    );
    println!(
        "balanced mean_layer1 {:.6} mean_final {:.6}",
        aggregate.balanced_mean_layer1, aggregate.balanced_mean_final
    );

    let mut report = RunReport::new("retention", argv);
    report.dataset = Some(DatasetStats::of(&a.data, &ds));
    report.config = Some(ConfigEcho {
        cost: cfg.c,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        cache_mb: cfg.cache_mb,
        kernel: cfg.kernel,
        layers: a.layers,
        partition: None,
        merge: a.merge.into(),
        workers: None,
        seed: None,
        seeds: Some(a.seeds),
        remap_zero_one: a.remap_01,
    });
    report.retention = Some(RetentionReport {
        global_sv_count: random.global_sv_ids.len(),
        random: random.runs,
        balanced: balanced.runs,
        aggregate,
    });
    write_report(&mut report, a.report.as_deref(), started)
}

fn cmd_prob(a: ProbArgs, argv: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let mut report = RunReport::new("prob", argv);
    let c = match &a.from_data {
        Some(path) => {
            let ds = load_dataset(path, a.remap_01)?;
            let cfg = a.solver.config(ds.dim())?;
            let (_, detail) = smo_train_detailed(&ds, &cfg)?;
            if !detail.converged {
                return Err(Error::Training(
                    "training hit max_iter; census would be unreliable".into(),
                ));
            }
            report.dataset = Some(DatasetStats::of(path, &ds));
            report.config = Some(ConfigEcho {
                cost: cfg.c,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                cache_mb: cfg.cache_mb,
                kernel: cfg.kernel,
                layers: vec![1],
                partition: None,
                merge: MergeKind::Pooled,
                workers: None,
                seed: None,
                seeds: None,
                remap_zero_one: a.remap_01,
            });
            census(&ds, &detail, a.m)?
        }
        None => RetentionCensus {
            p_sv: a.psv,
            n_sv: a.nsv,
            p_noise: a.pn,
            n_noise: a.nn,
            p_common: a.pds,
            n_common: a.nds,
            m: a.m,
        },
    };

    let random = retention_prob_random(&c)?;
    let balanced = retention_prob_balanced(&c)?;
    println!(
        "census pSv={} nSv={} pN={} nN={} pDS={} nDS={} m={}",
        c.p_sv, c.n_sv, c.p_noise, c.n_noise, c.p_common, c.n_common, c.m
    );
    println!("random {} {}", random, decimal12(&random));
    println!("balanced {} {}", balanced, decimal12(&balanced));
    // The event-space comparison only exists when both strategies produce
    // groups of the same size; for other censuses report it as absent.
    let denominator = match denominator_inequality(&c) {
        Ok((den_random, den_balanced, exceeds)) => {
            println!("denominator_random {den_random}");
            println!("denominator_balanced {den_balanced}");
            println!("random_denominator_exceeds {exceeds}");
            Some(DenominatorReport {
                random: den_random.to_string(),
                balanced: den_balanced.to_string(),
                random_exceeds: exceeds,
            })
        }
        Err(Error::Infeasible(msg)) => {
            println!("denominator_comparison_unavailable: {msg}");
            None
        }
        Err(e) => return Err(e),
    };

    report.prob = Some(ProbReport {
        census: c,
        random: ProbValue::of(&random),
        balanced: ProbValue::of(&balanced),
        denominator,
    });
    write_report(&mut report, a.report.as_deref(), started)
}
