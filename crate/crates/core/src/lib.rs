//! Aberration detection for daily disease-country news counts.
//!
//! The crate covers the whole offline workflow: ingest count series and gold
//! postings ([`series`]), run one of five detectors ([`detectors`]), score
//! alerts against qualifying windows ([`evaluation`]), grid-search thresholds
//! ([`tuning`]) and generate seeded synthetic scenarios ([`synth`]).
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod detectors;
pub mod error;
pub mod evaluation;
pub mod scalar;
pub mod series;
pub mod synth;
pub mod tuning;

pub use detectors::{detect, Algorithm, W2Strata};
pub use error::{Error, Result};
pub use evaluation::{aggregate, align, metrics, score, ConfusionTally, DatasetScore, DateRange};
pub use scalar::Scalar;
pub use series::{parse_counts, parse_gold, purge, CountSeries, GoldStandard, Topic};
pub use synth::{generate, sink_inject, OutbreakShape, OutbreakSpec, ScenarioSpec};
pub use tuning::{sweep, Objective, SweepSpec};

/// Detector configuration in double precision.
pub type DetectorConfig = detectors::DetectorConfig<f64>;
/// Detector configuration in single precision.
pub type DetectorConfig32 = detectors::DetectorConfig<f32>;
/// Per-day statistics and alerts in double precision.
pub type DetectionResult = detectors::DetectionResult<f64>;
/// Per-day statistics and alerts in single precision.
pub type DetectionResult32 = detectors::DetectionResult<f32>;
pub type BaselineStats = detectors::BaselineStats<f64>;
pub type EvaluationReport = evaluation::EvaluationReport<f64>;
pub type EvaluationReport32 = evaluation::EvaluationReport<f32>;
pub type MetricValue = evaluation::MetricValue<f64>;
pub type SweepOutcome = tuning::SweepOutcome<f64>;
pub type SweepRow = tuning::SweepRow<f64>;
