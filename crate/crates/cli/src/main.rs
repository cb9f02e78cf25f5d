//! `fairbayes` command-line experiment runner.
//!
//! Every subcommand builds an [`ExperimentConfig`] from an optional TOML file
//! and then applies the flags on top. Exit codes: 0 success, 1 configuration
//! error, 2 data error, 3 pipeline error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use fairbayes::experiment::report::{
    ablation_report, alpha_selection_report, run_report, sweep_report,
};
use fairbayes::experiment::{
    ablation, alpha_sweep, choose_alpha, compare_report, prepare, run_experiment, run_variants,
    tradeoff_constant, CalibrationSplit, ExperimentConfig, ReportFiles, ReportFormat, Stage,
    StageError, ThresholdChoice, Variant,
};
use fairbayes::metrics::BiasAggregation;
use fairbayes::threshold::TargetRate;
use fairbayes::{Error, PriorsMode};

#[derive(Parser, Debug)]
#[command(
    name = "fairbayes",
    version,
    about = "Fairness-aware Naive Bayes experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one variant and evaluate it on the test split.
    Run(ConfigArgs),
    /// Run a blending variant at every alpha of a grid.
    Sweep(ConfigArgs),
    /// Run blended_only, threshold_only and full_bmnb on one shared split.
    Ablate(ConfigArgs),
    /// Compare variants side by side, with the transcribed reference column.
    Compare(CompareArgs),
    /// Cross-validate the alpha grid and report the objective per alpha.
    SelectAlpha(ConfigArgs),
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Variants to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "baseline,full_bmnb")]
    variants: Vec<Variant>,
    /// Leave out the transcribed external reference column.
    #[arg(long)]
    no_reference: bool,
}

/// Flags mirroring the config file; each one overrides the file.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset name: adult, compas, framingham, synthetic or a custom name.
    #[arg(long)]
    dataset: Option<String>,
    /// Delimited data file; defaults to the dataset's file under data/.
    #[arg(long)]
    data_path: Option<PathBuf>,
    /// Schema file for custom datasets.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Seed for splitting, resampling and fold assignment [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Disable SMOTE+ENN resampling of the training rows.
    #[arg(long)]
    no_resample: bool,
    #[arg(long)]
    k_smote: Option<usize>,
    #[arg(long)]
    k_enn: Option<usize>,
    /// Relative variance smoothing.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Per-class row floor for a group model to be used.
    #[arg(long)]
    min_support: Option<usize>,
    /// `fixed`, `empirical` or two comma-separated probabilities `p0,p1`.
    #[arg(long, value_parser = parse_priors)]
    priors: Option<PriorsMode>,
    /// Fixed blending coefficient; skips cross-validated selection.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated alpha grid.
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    /// Accuracy weight of the selection objective.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Threshold calibration: dp, eo, fixed or none.
    #[arg(long)]
    threshold: Option<ThresholdChoice>,
    /// `model` or a rate in [0, 1].
    #[arg(long, value_parser = parse_target)]
    target_rate: Option<TargetRate>,
    /// Rows the thresholds are calibrated on: train or eval.
    #[arg(long)]
    calibration_split: Option<CalibrationSplit>,
    /// baseline, blended_only, threshold_only or full_bmnb.
    #[arg(long)]
    variant: Option<Variant>,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report formats, comma separated: json, text, csv.
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    formats: Option<Vec<ReportFormat>>,
    /// Bias index aggregation: mean-abs or rms.
    #[arg(long, value_parser = parse_aggregation)]
    bias_aggregation: Option<BiasAggregation>,
}

fn parse_priors(s: &str) -> Result<PriorsMode, String> {
    match s {
        "fixed" => Ok(PriorsMode::Fixed),
        "empirical" => Ok(PriorsMode::Empirical),
        _ => {
            let parts: Vec<f64> = s
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("priors {s:?}: {e}"))?;
            match parts[..] {
                [p0, p1] => Ok(PriorsMode::Explicit([p0, p1])),
                _ => Err(format!(
                    "priors {s:?}: expected fixed, empirical or two probabilities"
                )),
            }
        }
    }
}

fn parse_target(s: &str) -> Result<TargetRate, String> {
    if s == "model" {
        return Ok(TargetRate::Model);
    }
    s.parse::<f64>()
        .map(TargetRate::Fixed)
        .map_err(|e| format!("target rate {s:?}: {e}"))
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "text" | "txt" => Ok(ReportFormat::Text),
        "csv" => Ok(ReportFormat::Csv),
        _ => Err(format!(
            "unknown report format {s:?} (expected json, text or csv)"
        )),
    }
}

fn parse_aggregation(s: &str) -> Result<BiasAggregation, String> {
    match s {
        "mean-abs" | "mean_absolute" => Ok(BiasAggregation::MeanAbsolute),
        "rms" | "root_mean_square" => Ok(BiasAggregation::RootMeanSquare),
        _ => Err(format!(
            "unknown bias aggregation {s:?} (expected mean-abs or rms)"
        )),
    }
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig, StageError> {
        let config_err = |source: Error| StageError {
            stage: Stage::Config,
            source,
        };
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path).map_err(config_err)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.dataset {
            c.dataset.name = v.clone();
        }
        if let Some(v) = &self.data_path {
            c.dataset.path = Some(v.clone());
        }
        if let Some(v) = &self.schema {
            c.dataset.schema = Some(v.clone());
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.test_fraction {
            c.split.test_fraction = v;
        }
        if self.no_resample {
            c.preprocessing.resample = false;
        }
        if let Some(v) = self.k_smote {
            c.preprocessing.k_smote = v;
        }
        if let Some(v) = self.k_enn {
            c.preprocessing.k_enn = v;
        }
        if let Some(v) = self.epsilon {
            c.model.epsilon = v;
        }
        if let Some(v) = self.min_support {
            c.model.min_support = v;
        }
        if let Some(v) = self.priors {
            c.model.priors = v;
        }
        if let Some(v) = self.alpha {
            c.model.alpha = Some(v);
        }
        if let Some(v) = &self.alpha_grid {
            c.model.alpha_grid = v.clone();
        }
        if let Some(v) = self.lambda {
            c.model.lambda = v;
        }
        if let Some(v) = self.folds {
            c.model.folds = v;
        }
        if let Some(v) = self.threshold {
            c.thresholding.mode = v;
        }
        if let Some(v) = self.target_rate {
            c.thresholding.target = v;
        }
        if let Some(v) = self.calibration_split {
            c.thresholding.calibration_split = v;
        }
        if let Some(v) = self.variant {
            c.variant = v;
        }
        if let Some(v) = &self.out {
            c.output.dir = Some(v.clone());
        }
        if let Some(v) = &self.formats {
            c.output.formats = v.clone();
        }
        if let Some(v) = self.bias_aggregation {
            c.bias_aggregation = v;
        }
        c.validate().map_err(config_err)?;
        Ok(c)
    }
}

/// Prints the text report and writes the configured files.
fn emit(config: &ExperimentConfig, files: &ReportFiles) -> Result<(), StageError> {
    print!("{}", files.text);
    if let Some(dir) = &config.output.dir {
        let written = files
            .write(dir, &config.output.formats)
            .map_err(|source| StageError {
                stage: Stage::Report,
                source,
            })?;
        for path in written {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn execute(command: &Command) -> Result<(), StageError> {
    match command {
        Command::Run(args) => {
            let c = args.build()?;
            let r = run_experiment(&c)?;
            emit(&c, &run_report(&r))
        }
        Command::Sweep(args) => {
            let c = args.build()?;
            let p = prepare(&c)?;
            let sweep = alpha_sweep(&p, c.variant, &c.model.alpha_grid)?;
            let tradeoff = tradeoff_constant(&sweep.points);
            emit(&c, &sweep_report(&c, &sweep, &tradeoff))
        }
        Command::Ablate(args) => {
            let c = args.build()?;
            let p = prepare(&c)?;
            let runs = ablation(&p)?;
            emit(&c, &ablation_report(&runs))
        }
        Command::Compare(args) => {
            let c = args.config.build()?;
            if args.variants.is_empty() {
                return Err(StageError {
                    stage: Stage::Config,
                    source: Error::Config("no variants to compare".into()),
                });
            }
            let p = prepare(&c)?;
            let runs = run_variants(&p, &args.variants)?;
            emit(&c, &compare_report(&runs, !args.no_reference).files())
        }
        Command::SelectAlpha(args) => {
            let c = args.build()?;
            let p = prepare(&c)?;
            let variant = if c.variant.uses_blending() {
                c.variant
            } else {
                Variant::FullBmnb
            };
            let selection = choose_alpha(&p, variant)?;
            emit(&c, &alpha_selection_report(&c, &selection))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    match execute(&cli.command) {
        Ok(()) => {
            eprintln!("completed in {:.2?}", start.elapsed());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
