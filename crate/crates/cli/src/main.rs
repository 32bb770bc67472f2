//! `cad`: calibrate one-class detectors into conformal p-value models, score
//! batches with Benjamini-Hochberg correction, and run the replicate
//! benchmark over labelled CSV files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cad", version, about = "Resampling-conformal anomaly detection with FDR control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a detector and calibrate it into a model file
    Calibrate(CalibrateArgs),
    /// Compute p-values, BH-adjusted p-values and rejections for a batch
    Score(ScoreArgs),
    /// Run the replicate benchmark on a labelled CSV file
    Evaluate(EvaluateArgs),
    /// Run the benchmark across bootstrap calibration set sizes
    Sweep(SweepArgs),
    /// Write a synthetic labelled Gaussian dataset
    Synth(SynthArgs),
}

#[derive(Args)]
struct DetectorArgs {
    /// Scoring function: iforest, lof or pca
    #[arg(long, default_value = "iforest")]
    detector: String,
    /// Isolation Forest trees
    #[arg(long, default_value_t = 100)]
    if_trees: usize,
    /// Isolation Forest sub-sample size per tree
    #[arg(long, default_value_t = 256)]
    if_subsample: usize,
    /// LOF neighbourhood size
    #[arg(long, default_value_t = 20)]
    lof_k: usize,
    /// Retained principal components
    #[arg(long, default_value_t = 3)]
    pca_components: usize,
}

#[derive(Args)]
struct StrategyArgs {
    /// Calibration method: split, jackknife, jackknife+, cv, cv+, jab, jab+
    #[arg(long, default_value = "split")]
    method: String,
    /// Folds (cv, cv+; default 10) or bootstrap draws (jab, jab+; default 20)
    #[arg(long)]
    k: Option<usize>,
    /// Bootstrap sample size as a fraction of the training rows (jab, jab+; default 0.95)
    #[arg(long)]
    ratio: Option<f64>,
    /// Score aggregation across fold models for + methods: median or mean
    #[arg(long, default_value = "median")]
    aggregation: String,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Training CSV with a header row; every row is treated as normal
    train_csv: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Label column to drop; rows labelled 1 are excluded from training
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allow leave-one-out methods on more than 1000 training rows
    #[arg(long)]
    force_loo: bool,
    /// Model file to write, or - for standard output
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Model file written by `calibrate`
    model: PathBuf,
    /// Batch CSV with a header row
    batch_csv: PathBuf,
    /// Nominal FDR level
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Column to ignore in the batch file (e.g. a label column)
    #[arg(long)]
    label_col: Option<String>,
    /// Results CSV to write, or - for standard output
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Labelled CSV; the label column holds 0 (inlier) or 1 (outlier)
    labeled_csv: PathBuf,
    /// Name of the label column
    #[arg(long, default_value = "y")]
    label_col: String,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Training replicates J
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    /// Test sets per replicate L
    #[arg(long, default_value_t = 20)]
    test_sets: usize,
    /// Nominal FDR level
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Fraction of inliers drawn into each training pool
    #[arg(long, default_value_t = 0.5)]
    train_frac: f64,
    /// Upper bound on the split calibration set
    #[arg(long, default_value_t = 2000)]
    cal_cap: usize,
    /// Upper bound on the test set size
    #[arg(long, default_value_t = 1000)]
    test_cap: usize,
    /// Outlier fraction of each test set
    #[arg(long, default_value_t = 0.1)]
    outlier_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allow leave-one-out methods on training pools above 1000 rows
    #[arg(long)]
    force_loo: bool,
    /// Write the JSON report here, or - for standard output
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the summary table here, or - for standard output
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Not supported here; use the `sweep` subcommand
    #[arg(long, value_name = "SIZES")]
    sweep: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Bootstrap method: jab or jab+
    #[arg(long, default_value = "jab")]
    method: String,
    /// Bootstrap sample size as a fraction of the training pool
    #[arg(long)]
    ratio: Option<f64>,
    /// Score aggregation for jab+: median or mean
    #[arg(long, default_value = "median")]
    aggregation: String,
    /// Comma-separated calibration set sizes, e.g. 100,200,500
    #[arg(long, required = true, value_delimiter = ',')]
    sizes: Vec<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    n_inlier: usize,
    #[arg(long, default_value_t = 50)]
    n_outlier: usize,
    /// Feature dimension
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Euclidean distance between the inlier and outlier means
    #[arg(long, default_value_t = 4.0)]
    shift: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV to write, or - for standard output
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Score(a) => commands::score(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("cad: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
