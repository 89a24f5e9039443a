//! Command-line front end: single-shot `cluster`, `distance` and `evaluate`
//! commands plus a `bench` grid runner that writes one CSV per metric.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 convergence failure.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::clustering::{fit_baseline, fit_kasba, BaselineConfig, BaselineKind, ClusterModel, KasbaConfig};
use crate::distances::{pairwise_self, CallCounter, CallCounts, DistanceKind, Stage};
use crate::error::Error;
use crate::metrics::{Metric, Scores};
use crate::tsdata::{load_tsv, Dataset, TimeSeries};

/// Environment variable naming the directory searched for dataset names.
pub const DATA_DIR_ENV: &str = "KASBA_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "kasba",
    version,
    about = "Elastic time-series k-means clustering and benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one clusterer on one dataset and write labels plus a JSON summary.
    Cluster(ClusterArgs),
    /// Run an algorithm x dataset x repetition grid and write per-metric CSVs.
    Bench(BenchArgs),
    /// Write the pairwise distance matrix of a dataset as headerless CSV.
    Distance(DistanceArgs),
    /// Score predicted labels against true labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// MSM everywhere, stochastic subgradient barycentres, pruned assignment.
    Kasba,
    /// Lloyd's with Euclidean distance and mean centroids.
    Euclid,
    /// Lloyd's with MSM assignment and mean centroids.
    MsmAssign,
    /// Lloyd's with MSM assignment and MSM barycentres.
    Mba,
    /// Lloyd's with DTW assignment and DTW barycentres.
    Dba,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Kasba => "kasba",
            Algorithm::Euclid => "euclid",
            Algorithm::MsmAssign => "msm-assign",
            Algorithm::Mba => "mba",
            Algorithm::Dba => "dba",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitPolicy {
    /// Fit on the train split, label the test split by nearest centroid.
    TrainTest,
    /// Fit and score on train and test combined.
    Combined,
}

/// Parameters shared by every fitting command.
#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Number of clusters; defaults to the number of classes in the data.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distance override for kasba, msm-assign and mba (`msm`, `msm:<c>`, `dtw`, `euclidean`).
    #[arg(long)]
    pub distance: Option<DistanceKind>,
    /// Disable triangle-inequality pruning in kasba assignment.
    #[arg(long)]
    pub no_pruning: bool,
    #[arg(long)]
    pub max_its: Option<usize>,
    /// Restarts for the Lloyd's baselines.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Skip per-series z-normalisation.
    #[arg(long)]
    pub no_normalise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    /// Training TSV (label in first column), or a dataset name under $KASBA_DATA_DIR.
    #[arg(long)]
    pub data: String,
    /// Test TSV, used with --combined.
    #[arg(long)]
    pub test: Option<String>,
    /// Fit on train and test combined (test path derived from *_TRAIN.tsv if not given).
    #[arg(long)]
    pub combined: bool,
    #[arg(long, value_enum, default_value_t = Algorithm::Kasba)]
    pub algo: Algorithm,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Input rows have no label column.
    #[arg(long)]
    pub no_label: bool,
    /// Output directory for labels.txt, summary.json and centroids.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write the fitted centroids, one per line.
    #[arg(long)]
    pub centroids: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Dataset directories, *_TRAIN.tsv files, or names under $KASBA_DATA_DIR.
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    pub data: Vec<String>,
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',', value_enum)]
    pub algos: Vec<Algorithm>,
    #[arg(long, value_enum, default_value_t = SplitPolicy::TrainTest)]
    pub split: SplitPolicy,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Repetitions per cell; repetition r uses seed + r.
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Per-cell wall-clock limit in seconds.
    #[arg(long)]
    pub timeout_secs: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub data: String,
    #[arg(long, default_value = "msm")]
    pub distance: DistanceKind,
    #[arg(long)]
    pub no_label: bool,
    #[arg(long)]
    pub no_normalise: bool,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// File with one true label per line.
    #[arg(long = "true")]
    pub y_true: PathBuf,
    /// File with one predicted label per line.
    #[arg(long = "pred")]
    pub y_pred: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::Config(_)) => 1,
            CliError::Lib(Error::Convergence(_) | Error::EmptyCluster(_)) => 3,
            _ => 2,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Cluster(args) => cmd_cluster(args).map(|_| ()),
        Command::Bench(args) => cmd_bench(args).map(|_| ()),
        Command::Distance(args) => cmd_distance(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

/// Resolves a dataset argument to an existing file, trying `$KASBA_DATA_DIR`
/// for names that are not paths. A directory resolves to the
/// `<Name>_TRAIN.tsv` inside it.
pub fn resolve_path(arg: &str) -> Result<PathBuf, CliError> {
    let mut candidates = vec![PathBuf::from(arg)];
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        candidates.push(PathBuf::from(dir).join(arg));
    }
    for path in candidates {
        if path.is_dir() {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let train = path.join(format!("{name}_TRAIN.tsv"));
            if train.is_file() {
                return Ok(train);
            }
        } else if path.exists() {
            return Ok(path);
        }
    }
    Err(CliError::Lib(Error::Io(io::Error::new(
        io::ErrorKind::NotFound,
        format!("dataset {arg:?} not found"),
    ))))
}

/// Train and test TSV paths for a dataset argument: a directory holding
/// `<Name>_TRAIN.tsv`/`<Name>_TEST.tsv`, a `*_TRAIN.tsv` file, or a name.
pub fn resolve_splits(arg: &str) -> Result<(PathBuf, PathBuf), CliError> {
    let train = resolve_path(arg)?;
    let test = sibling_test_path(&train)
        .ok_or_else(|| CliError::Usage(format!("cannot derive a test split from {}", train.display())))?;
    Ok((train, test))
}

fn sibling_test_path(train: &Path) -> Option<PathBuf> {
    let name = train.file_name()?.to_string_lossy();
    let test = name.replace("_TRAIN", "_TEST");
    (test != name).then(|| train.with_file_name(test))
}

fn load(path: &Path, has_label: bool, normalise: bool) -> Result<Dataset, CliError> {
    let d = load_tsv(path, has_label)?;
    Ok(if normalise { d.z_normalise() } else { d })
}

/// Fits `algo` with the shared fitting parameters.
pub fn fit_algorithm(algo: Algorithm, series: &[TimeSeries], k: usize, fit: &FitArgs) -> crate::Result<ClusterModel> {
    let msm = fit.distance.unwrap_or_default();
    let baseline = |kind: BaselineKind, distance: DistanceKind| {
        let mut cfg = BaselineConfig::new(kind, distance, k).with_seed(fit.seed);
        if let Some(r) = fit.restarts {
            cfg.restarts = r;
        }
        if let Some(m) = fit.max_its {
            cfg.max_its = m;
        }
        fit_baseline(series, &cfg)
    };
    match algo {
        Algorithm::Kasba => {
            let mut cfg = KasbaConfig::new(k)
                .with_seed(fit.seed)
                .with_distance(msm)
                .with_pruning(!fit.no_pruning);
            if let Some(m) = fit.max_its {
                cfg.max_its = m;
            }
            fit_kasba(series, &cfg)
        }
        Algorithm::Euclid => baseline(BaselineKind::EuclidMean, DistanceKind::Euclidean),
        Algorithm::MsmAssign => baseline(BaselineKind::ElasticAssignOnly, msm),
        Algorithm::Mba => baseline(BaselineKind::ElasticBA, msm),
        Algorithm::Dba => baseline(BaselineKind::ElasticBA, DistanceKind::Dtw),
    }
}

fn choose_k(fit: &FitArgs, data: &Dataset) -> Result<usize, CliError> {
    match (fit.k, data.n_classes()) {
        (Some(0), _) => Err(CliError::Usage("--k must be at least 1".into())),
        (Some(k), _) => Ok(k),
        (None, Some(c)) => Ok(c),
        (None, None) => Err(CliError::Usage("--k is required for unlabelled data".into())),
    }
}

#[derive(Debug, Serialize)]
pub struct ClusterSummary {
    pub dataset: String,
    pub algorithm: String,
    pub distance: String,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub distance_calls: StageCalls,
    pub scores: Option<Scores>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct StageCalls {
    pub init: u64,
    pub update: u64,
    pub assign: u64,
    pub total: u64,
}

impl From<CallCounts> for StageCalls {
    fn from(c: CallCounts) -> Self {
        StageCalls {
            init: c.init,
            update: c.update,
            assign: c.assign,
            total: c.total(),
        }
    }
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<ClusterSummary, CliError> {
    if args.fit.k == Some(0) {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let normalise = !args.fit.no_normalise;
    let has_label = !args.no_label;
    let train_path = resolve_path(&args.data)?;
    let mut data = load(&train_path, has_label, normalise)?;
    if args.combined {
        let test_path = match &args.test {
            Some(t) => resolve_path(t)?,
            None => sibling_test_path(&train_path).ok_or_else(|| CliError::Usage("--combined needs --test".into()))?,
        };
        let test = load(&test_path, has_label, normalise)?;
        data = Dataset::combine(&data, &test)?;
    }
    let k = choose_k(&args.fit, &data)?;

    let start = Instant::now();
    let model = fit_algorithm(args.algo, data.series(), k, &args.fit)?;
    let runtime = start.elapsed().as_secs_f64();

    let scores = data
        .labels()
        .map(|truth| Scores::compute(truth, &model.labels))
        .transpose()?;

    fs::create_dir_all(&args.out)?;
    write_lines(&args.out.join("labels.txt"), model.labels.iter())?;
    if args.centroids {
        write_matrix(
            &args.out.join("centroids.csv"),
            model.centroids.iter().map(|c| c.values()),
        )?;
    }
    let summary = ClusterSummary {
        dataset: data.name().to_string(),
        algorithm: args.algo.name().to_string(),
        distance: model.distance.to_string(),
        n: data.len(),
        k,
        seed: args.fit.seed,
        iterations: model.iterations_run,
        converged: model.converged,
        distance_calls: model.calls.into(),
        scores,
        runtime_seconds: runtime,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    fs::write(args.out.join("summary.json"), json)?;
    Ok(summary)
}

fn write_lines<T: std::fmt::Display>(path: &Path, items: impl Iterator<Item = T>) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for item in items {
        writeln!(out, "{item}")?;
    }
    out.flush()
}

fn write_matrix<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_distance(args: &DistanceArgs) -> Result<(), CliError> {
    args.distance.validate()?;
    let data = load(&resolve_path(&args.data)?, !args.no_label, !args.no_normalise)?;
    let matrix = pairwise_self(data.series(), args.distance, &CallCounter::new(), Stage::Assign)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    for row in &matrix {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn read_label_file(path: &Path) -> Result<Vec<usize>, CliError> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Lib(Error::InvalidValue(format!("{}: bad label {l:?}", path.display()))))
        })
        .collect()
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let truth = read_label_file(&args.y_true)?;
    let pred = read_label_file(&args.y_pred)?;
    let scores = Scores::compute(&truth, &pred)?;
    println!("{}", serde_json::to_string_pretty(&scores)?);
    Ok(())
}

/// One completed grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub dataset: String,
    pub algorithm: String,
    pub seed: u64,
    pub scores: Scores,
    pub runtime_seconds: f64,
    pub distance_calls: u64,
}

/// A grid cell that did not produce scores.
#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub dataset: String,
    pub algorithm: String,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct BenchOutcome {
    pub results: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

struct Prepared {
    name: String,
    fit_on: Dataset,
    score_on: Dataset,
}

fn prepare(arg: &str, split: SplitPolicy, normalise: bool) -> Result<Prepared, CliError> {
    let (train_path, test_path) = resolve_splits(arg)?;
    let train = load(&train_path, true, normalise)?;
    let test = load(&test_path, true, normalise)?;
    let name = train.name().to_string();
    Ok(match split {
        SplitPolicy::TrainTest => Prepared {
            name,
            fit_on: train,
            score_on: test,
        },
        SplitPolicy::Combined => {
            let all = Dataset::combine(&train, &test)?;
            Prepared {
                name,
                fit_on: all.clone(),
                score_on: all,
            }
        }
    })
}

fn run_cell(algo: Algorithm, data: &Prepared, split: SplitPolicy, fit: &FitArgs) -> Result<(Scores, u64), CliError> {
    let k = choose_k(fit, &data.fit_on)?;
    let model = fit_algorithm(algo, data.fit_on.series(), k, fit)?;
    let truth = data
        .score_on
        .labels()
        .ok_or_else(|| CliError::Usage(format!("{} has no labels to score against", data.name)))?;
    let predicted = match split {
        SplitPolicy::TrainTest => model.predict(data.score_on.series())?.0,
        SplitPolicy::Combined => model.labels.clone(),
    };
    Ok((Scores::compute(truth, &predicted)?, model.calls.total()))
}

/// Runs the grid in dataset, algorithm, repetition order and writes
/// `clacc.csv`, `ari.csv`, `nmi.csv`, `ami.csv` and `failures.csv`.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchOutcome, CliError> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if args.fit.k == Some(0) {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let timeout = match args.timeout_secs {
        Some(t) if !(t > 0.0 && t.is_finite()) => {
            return Err(CliError::Usage("--timeout-secs must be positive".into()))
        }
        t => t.map(Duration::from_secs_f64),
    };
    fs::create_dir_all(&args.out)?;

    let mut outcome = BenchOutcome::default();
    for arg in &args.data {
        let prepared = match prepare(arg, args.split, !args.fit.no_normalise) {
            Ok(p) => Arc::new(p),
            Err(e) => {
                for &algo in &args.algos {
                    for rep in 0..args.reps {
                        outcome.failures.push(CellFailure {
                            dataset: arg.clone(),
                            algorithm: algo.name().into(),
                            seed: args.fit.seed + rep,
                            reason: e.to_string(),
                        });
                    }
                }
                continue;
            }
        };
        for &algo in &args.algos {
            for rep in 0..args.reps {
                let seed = args.fit.seed + rep;
                let fit = FitArgs {
                    seed,
                    ..args.fit.clone()
                };
                let start = Instant::now();
                let result = match timeout {
                    None => run_cell(algo, &prepared, args.split, &fit),
                    Some(limit) => {
                        let (tx, rx) = mpsc::channel();
                        let data = Arc::clone(&prepared);
                        let split = args.split;
                        std::thread::spawn(move || {
                            let _ = tx.send(run_cell(algo, &data, split, &fit));
                        });
                        rx.recv_timeout(limit).unwrap_or_else(|_| {
                            Err(CliError::Usage(format!("timed out after {:.3}s", limit.as_secs_f64())))
                        })
                    }
                };
                let runtime = start.elapsed().as_secs_f64();
                match result {
                    Ok((scores, calls)) => outcome.results.push(CellResult {
                        dataset: prepared.name.clone(),
                        algorithm: algo.name().into(),
                        seed,
                        scores,
                        runtime_seconds: runtime,
                        distance_calls: calls,
                    }),
                    Err(e) => outcome.failures.push(CellFailure {
                        dataset: prepared.name.clone(),
                        algorithm: algo.name().into(),
                        seed,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }

    for metric in Metric::ALL {
        let mut w = csv::Writer::from_path(args.out.join(format!("{}.csv", metric.name())))?;
        w.write_record([
            "dataset",
            "algorithm",
            "seed",
            "score",
            "runtime_seconds",
            "distance_calls",
        ])?;
        for r in &outcome.results {
            w.write_record([
                r.dataset.clone(),
                r.algorithm.clone(),
                r.seed.to_string(),
                r.scores.get(metric).to_string(),
                format!("{:.6}", r.runtime_seconds),
                r.distance_calls.to_string(),
            ])?;
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_path(args.out.join("failures.csv"))?;
    w.write_record(["dataset", "algorithm", "seed", "reason"])?;
    for f in &outcome.failures {
        w.write_record([
            f.dataset.as_str(),
            f.algorithm.as_str(),
            &f.seed.to_string(),
            f.reason.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Lib(Error::Config("x".into())).exit_code(), 1);
        assert_eq!(CliError::Lib(Error::EmptyDataset("x".into())).exit_code(), 2);
        assert_eq!(CliError::Lib(Error::Convergence("x".into())).exit_code(), 3);
    }

    #[test]
    fn test_path_is_derived_from_train() {
        assert_eq!(
            sibling_test_path(Path::new("/d/GunPoint_TRAIN.tsv")),
            Some(PathBuf::from("/d/GunPoint_TEST.tsv"))
        );
        assert_eq!(sibling_test_path(Path::new("/d/x.tsv")), None);
    }

    #[test]
    fn k_zero_is_usage_error() {
        assert_eq!(run(["kasba", "cluster", "--data", "nowhere.tsv", "--k", "0"]), 1);
        assert_eq!(run(["kasba", "cluster", "--data", "nowhere.tsv", "--k", "2"]), 2);
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("a.tsv");
        fs::write(&p, "0\t1\t2\n1\t3\t4\n").unwrap();
        let code = run([
            "kasba",
            "cluster",
            "--data",
            p.to_str().unwrap(),
            "--k",
            "0",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["kasba", "cluster", "--bogus"]), 1);
    }
}
