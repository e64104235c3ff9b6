use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: negative count {value}")]
    NegativeCount { line: u64, value: i64 },

    #[error("invalid topic: {0}")]
    InvalidTopic(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),

    #[error("day {day}: insufficient history")]
    InsufficientHistory { day: usize },

    #[error("topic mismatch: {left} vs {right}")]
    TopicMismatch { left: String, right: String },

    #[error("date {date} outside {start}..={end}")]
    DateOutOfRange {
        date: NaiveDate,
        start: NaiveDate,
        end: NaiveDate,
    },

    #[error("gold topic {0} has no count series")]
    MissingTopic(String),

    #[error("invalid evaluation input: {0}")]
    InvalidEvaluation(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("no informative threshold: F1 undefined at every grid point")]
    NoInformativeThreshold,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
