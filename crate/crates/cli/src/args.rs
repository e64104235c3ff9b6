use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "aberrant",
    version,
    about = "Aberration detection for daily news-count series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every day of every topic and emit per-day statistics and alerts.
    Detect(DetectArgs),
    /// Score alerts against gold postings, per topic and aggregated.
    Evaluate(EvaluateArgs),
    /// Grid-search the alert threshold maximising F1.
    Sweep(SweepArgs),
    /// Generate a seeded synthetic counts/gold pair from a scenario file.
    Simulate(SimulateArgs),
    /// Mean value per weekday, for counts or alerts.
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmArg {
    C2,
    C3,
    W2,
    Fstat,
    Ewma,
    /// All five algorithms (evaluate and profile only).
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrataArg {
    WeekdayBaseline,
    PerStratum,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    Pooled,
    PerDatasetMean,
}

/// Detector settings shared by every command that runs a detector. Each flag
/// may also come from the JSON file given with `--config`; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct DetectorFlags {
    /// JSON config file with the same keys as the flags (e.g. "sigma-floor").
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Detector to run (default c2).
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    /// Alert when the statistic is strictly above this value.
    #[arg(long, value_name = "R", allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Baseline window length in days.
    #[arg(long, value_name = "N")]
    pub baseline: Option<usize>,
    /// Guard band in days between baseline and target.
    #[arg(long, value_name = "N")]
    pub guard: Option<usize>,
    /// Slack in standard deviations for C2/C3/W2 (default 1).
    #[arg(long, value_name = "R", allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// EWMA smoothing weight in (0, 1) (default 0.2).
    #[arg(long, value_name = "R")]
    pub lambda: Option<f64>,
    /// Lower bound on the baseline standard deviation (default 0.2).
    #[arg(long = "sigma-floor", value_name = "R")]
    pub sigma_floor: Option<f64>,
    /// Counts at or below this value are zeroed before detection.
    #[arg(long, value_name = "N")]
    pub purge: Option<u64>,
    /// Test window length in days for the F-statistic (default 1).
    #[arg(long = "fstat-test-len", value_name = "N")]
    pub fstat_test_len: Option<usize>,
    /// Baseline strata used by W2.
    #[arg(long = "w2-strata", value_enum)]
    pub w2_strata: Option<StrataArg>,
    /// Output format (default csv).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Counts CSV (`disease,country,date,count`).
    #[arg(long, value_name = "PATH")]
    pub counts: PathBuf,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Counts CSV, or the output of `detect` to score its alert column as is.
    #[arg(long, value_name = "PATH")]
    pub counts: PathBuf,
    /// Gold CSV (`disease,country,date`).
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Training counts CSV.
    #[arg(long, value_name = "PATH")]
    pub counts: PathBuf,
    /// Training gold CSV.
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,
    /// Comma-separated, strictly increasing thresholds (default 0.1..10 step 0.1).
    #[arg(
        long,
        value_name = "R,R,...",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub grid: Option<Vec<f64>>,
    /// Optional values of k to sweep jointly with the threshold.
    #[arg(long = "k-grid", value_delimiter = ',', allow_negative_numbers = true)]
    pub k_grid: Option<Vec<f64>>,
    /// Optional values of lambda to sweep jointly.
    #[arg(long = "lambda-grid", value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Optional values of the sigma floor to sweep jointly.
    #[arg(long = "sigma-floor-grid", value_delimiter = ',')]
    pub sigma_floor_grid: Option<Vec<f64>>,
    /// Optional purge cutoffs to sweep jointly.
    #[arg(long = "purge-grid", value_delimiter = ',')]
    pub purge_grid: Option<Vec<u64>>,
    /// F1 over pooled tallies, or the mean of per-dataset F1 (default pooled).
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Counts CSV destination; stdout when absent.
    #[arg(long = "counts-out", value_name = "PATH")]
    pub counts_out: Option<PathBuf>,
    /// Gold CSV destination; not written when absent.
    #[arg(long = "gold-out", value_name = "PATH")]
    pub gold_out: Option<PathBuf>,
    /// JSON config file; only its `seed` key is used here.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Counts CSV or `detect` output. With `--algorithm`, counts are run
    /// through the detector and its alerts are profiled.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

/// Keys of the `--config` JSON file.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub algorithm: Option<AlgorithmArg>,
    pub threshold: Option<f64>,
    pub baseline: Option<usize>,
    pub guard: Option<usize>,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub purge: Option<u64>,
    pub fstat_test_len: Option<usize>,
    pub w2_strata: Option<StrataArg>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub grid: Option<Vec<f64>>,
    pub k_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub sigma_floor_grid: Option<Vec<f64>>,
    pub purge_grid: Option<Vec<u64>>,
    pub objective: Option<ObjectiveArg>,
}
