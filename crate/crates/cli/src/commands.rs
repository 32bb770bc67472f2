use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use conformal_ad::bench::{
    load_csv, make_synthetic, render_table, run_calibration_sweep, run_experiment, write_csv, ExperimentConfig,
    ExperimentReport, LOO_POOL_LIMIT,
};
use conformal_ad::conformal::{calibrate as calibrate_strategy, from_reader, to_writer, Aggregation, Strategy};
use conformal_ad::detectors::DetectorConfig;
use conformal_ad::multiplicity::benjamini_hochberg;
use conformal_ad::RngSeed;

use crate::{CalibrateArgs, DetectorArgs, EvaluateArgs, ExperimentArgs, ScoreArgs, StrategyArgs, SweepArgs, SynthArgs};

/// Failure of a subcommand: bad inputs exit 1, file system trouble exits 2.
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        CliError::Io(format!("{}: {err}", display_path(path)))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<conformal_ad::Error> for CliError {
    fn from(e: conformal_ad::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

type CliResult = Result<(), CliError>;

fn is_stdout(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn display_path(path: &Path) -> String {
    if is_stdout(path) {
        "<stdout>".into()
    } else {
        path.display().to_string()
    }
}

/// Runs `write` against the file at `path` (or standard output for `-`)
/// and flushes it.
fn write_output<F>(path: &Path, write: F) -> CliResult
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let mut out: Box<dyn Write> = if is_stdout(path) {
        Box::new(io::stdout().lock())
    } else {
        Box::new(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
    };
    write(&mut *out)?;
    out.flush().map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    write_output(path, |w| w.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e)))
}

fn detector_config(args: &DetectorArgs, seed: u64) -> Result<DetectorConfig, CliError> {
    let mut cfg = DetectorConfig::new(args.detector.parse()?).with_seed(RngSeed(seed));
    cfg.if_trees = args.if_trees;
    cfg.if_subsample = args.if_subsample;
    cfg.lof_neighbors = args.lof_k;
    cfg.pca_components = args.pca_components;
    Ok(cfg)
}

fn strategy(method: &str, k: Option<usize>, ratio: Option<f64>, aggregation: &str) -> Result<Strategy, CliError> {
    let aggregation: Aggregation = aggregation.parse()?;
    Ok(Strategy::from_name(method, k, ratio)?.with_aggregation(aggregation))
}

fn strategy_from(args: &StrategyArgs) -> Result<Strategy, CliError> {
    strategy(&args.method, args.k, args.ratio, &args.aggregation)
}

pub fn calibrate(args: CalibrateArgs) -> CliResult {
    let strategy = strategy_from(&args.strategy)?;
    let detector = detector_config(&args.detector, args.seed)?;
    let data = load_csv(&args.train_csv, args.label_col.as_deref())?;
    let train = if data.has_labels() {
        data.inliers()?
    } else {
        data.features
    };
    if strategy.is_leave_one_out() && train.n_rows() > LOO_POOL_LIMIT && !args.force_loo {
        return Err(CliError::Invalid(format!(
            "{} needs one model fit per row; {} training rows exceed the low-data gate of {LOO_POOL_LIMIT} rows (use cv/jab, or pass --force-loo)",
            strategy.name(),
            train.n_rows()
        )));
    }
    detector.validate(train.n_rows(), train.n_cols())?;
    let model = calibrate_strategy(&strategy, &detector, &train, RngSeed(args.seed))?;
    write_output(&args.out, |w| to_writer(&model, w).map_err(CliError::from))?;
    eprintln!(
        "calibrated {} with {strategy} on {} rows x {} features: n_cal = {}",
        detector.algorithm,
        train.n_rows(),
        train.n_cols(),
        model.n_cal()
    );
    Ok(())
}

pub fn score(args: ScoreArgs) -> CliResult {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Invalid(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let file = File::open(&args.model).map_err(|e| CliError::io(&args.model, e))?;
    let model = from_reader(io::BufReader::new(file))
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.model.display())))?;
    let batch = load_csv(&args.batch_csv, args.label_col.as_deref())?;
    let p = model.p_values(&batch.features)?;
    let bh = benjamini_hochberg(&p, args.alpha)?;
    let out = args.out.clone();
    write_output(&args.out, |w| {
        let io = |e| CliError::io(&out, e);
        writeln!(w, "row_index,p_value,p_adjusted,reject").map_err(io)?;
        for (i, ((p, adj), rej)) in p.iter().zip(&bh.adjusted).zip(&bh.rejected).enumerate() {
            writeln!(w, "{i},{p:.16e},{adj:.16e},{}", u8::from(*rej)).map_err(io)?;
        }
        Ok(())
    })?;
    eprintln!(
        "scored {} rows: {} rejected at alpha = {}",
        p.len(),
        bh.n_rejected(),
        args.alpha
    );
    Ok(())
}

fn experiment_config(args: &ExperimentArgs, strategy: Strategy) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(detector_config(&args.detector, args.seed)?, strategy);
    cfg.replicates = args.replicates;
    cfg.test_sets = args.test_sets;
    cfg.alpha = args.alpha;
    cfg.train_frac = args.train_frac;
    cfg.cal_cap = args.cal_cap;
    cfg.test_cap = args.test_cap;
    cfg.outlier_frac_test = args.outlier_frac;
    cfg.seed = RngSeed(args.seed);
    cfg.allow_large_loo = args.force_loo;
    cfg.validate()?;
    Ok(cfg)
}

fn emit_reports(args: &ExperimentArgs, reports: &[ExperimentReport], json: String) -> CliResult {
    if let Some(path) = &args.json {
        write_text(path, &(json + "\n"))?;
    }
    write_text(&args.out, &render_table(reports))
}

pub fn evaluate(args: EvaluateArgs) -> CliResult {
    if args.sweep.is_some() {
        return Err(CliError::Invalid(
            "evaluate runs a single configuration; use `cad sweep --sizes ...` for calibration size sweeps".into(),
        ));
    }
    let cfg = experiment_config(&args.experiment, strategy_from(&args.strategy)?)?;
    let data = load_csv(&args.experiment.labeled_csv, Some(&args.experiment.label_col))?;
    let report = run_experiment(&cfg, &data)?;
    eprintln!("{}: {} in {:.2} s", data.name, report.method, report.runtime.as_secs_f64());
    let json = report.to_json();
    emit_reports(&args.experiment, &[report], json)
}

pub fn sweep(args: SweepArgs) -> CliResult {
    if !matches!(args.method.as_str(), "jab" | "jab+") {
        return Err(CliError::Invalid(format!(
            "sweep varies the bootstrap calibration size and requires --method jab or jab+, got {}",
            args.method
        )));
    }
    if args.sizes.is_empty() {
        return Err(CliError::Invalid("--sizes needs at least one calibration size".into()));
    }
    let cfg = experiment_config(
        &args.experiment,
        strategy(&args.method, None, args.ratio, &args.aggregation)?,
    )?;
    let data = load_csv(&args.experiment.labeled_csv, Some(&args.experiment.label_col))?;
    let reports = run_calibration_sweep(&cfg, &data, &args.sizes)?;
    for (size, r) in args.sizes.iter().zip(&reports) {
        eprintln!("{}: target n_cal {size}: {} in {:.2} s", data.name, r.method, r.runtime.as_secs_f64());
    }
    let json = serde_json::to_string_pretty(&reports).expect("reports serialise");
    emit_reports(&args.experiment, &reports, json)
}

pub fn synth(args: SynthArgs) -> CliResult {
    let data = make_synthetic(args.n_inlier, args.n_outlier, args.d, args.shift, RngSeed(args.seed))?;
    let out = args.out.clone();
    write_output(&args.out, |w| write_csv(&data, w).map_err(|e| CliError::io(&out, e)))?;
    eprintln!(
        "wrote {} inliers and {} outliers in {} dimensions to {}",
        args.n_inlier,
        args.n_outlier,
        args.d,
        display_path(&args.out)
    );
    Ok(())
}
