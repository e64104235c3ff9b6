//! Reading either a counts CSV or the per-day output of `detect`.

use std::collections::BTreeMap;
use std::path::Path;

use aberrant::series::COUNTS_HEADER;
use aberrant::{parse_counts, parse_gold, CountSeries, GoldStandard, Topic};
use chrono::{Days, NaiveDate};

use crate::error::CliError;

pub const DETECT_HEADER: [&str; 6] = ["disease", "country", "date", "count", "statistic", "alert"];

/// Alerts for one topic as emitted by `detect`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertTrack {
    pub topic: Topic,
    pub start_date: NaiveDate,
    pub counts: Vec<u64>,
    pub statistic: Vec<Option<f64>>,
    pub alert: Vec<bool>,
}

impl AlertTrack {
    pub fn date(&self, i: usize) -> NaiveDate {
        self.start_date + Days::new(i as u64)
    }
}

pub enum Input {
    Counts(Vec<CountSeries>),
    Alerts(Vec<AlertTrack>),
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn header_fields(text: &str) -> Vec<String> {
    text.lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(|f| f.trim().to_ascii_lowercase())
        .collect()
}

fn with_path(path: &Path, e: aberrant::Error) -> CliError {
    match CliError::from(e) {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let text = read_text(path)?;
    let header = header_fields(&text);
    if text.trim().is_empty() || header == COUNTS_HEADER {
        parse_counts(text.as_bytes())
            .map(Input::Counts)
            .map_err(|e| with_path(path, e))
    } else if header == DETECT_HEADER {
        parse_alerts(&text).map(Input::Alerts).map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    } else {
        Err(CliError::Data(format!(
            "{}: line 1: expected header `{}` or `{}`",
            path.display(),
            COUNTS_HEADER.join(","),
            DETECT_HEADER.join(",")
        )))
    }
}

pub fn read_counts(path: &Path) -> Result<Vec<CountSeries>, CliError> {
    match read_input(path)? {
        Input::Counts(c) => Ok(c),
        Input::Alerts(_) => Err(CliError::Data(format!(
            "{}: expected a counts CSV, found detect output",
            path.display()
        ))),
    }
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldStandard>, CliError> {
    let text = read_text(path)?;
    parse_gold(text.as_bytes()).map_err(|e| with_path(path, e))
}

struct Row {
    line: u64,
    date: NaiveDate,
    count: u64,
    statistic: Option<f64>,
    alert: bool,
}

fn parse_alerts(text: &str) -> Result<Vec<AlertTrack>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut by_topic: BTreeMap<Topic, Vec<Row>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |m: String| CliError::Data(format!("line {line}: {m}"));
        if record.len() != DETECT_HEADER.len() {
            return Err(bad(format!("expected 6 columns, found {}", record.len())));
        }
        let topic = Topic::new(&record[0], &record[1]).map_err(|e| bad(e.to_string()))?;
        let date = NaiveDate::parse_from_str(&record[2], "%Y-%m-%d")
            .map_err(|e| bad(format!("bad date {:?}: {e}", &record[2])))?;
        let count = record[3]
            .parse()
            .map_err(|_| bad(format!("bad count {:?}", &record[3])))?;
        let statistic = match &record[4] {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|_| bad(format!("bad statistic {s:?}")))?,
            ),
        };
        let alert = match &record[5] {
            "true" => true,
            "false" => false,
            s => return Err(bad(format!("bad alert flag {s:?}"))),
        };
        by_topic.entry(topic).or_default().push(Row {
            line,
            date,
            count,
            statistic,
            alert,
        });
    }
    by_topic
        .into_iter()
        .map(|(topic, mut rows)| {
            rows.sort_by_key(|r| r.date);
            let start_date = rows[0].date;
            for (i, r) in rows.iter().enumerate() {
                if r.date != start_date + Days::new(i as u64) {
                    return Err(CliError::Data(format!(
                        "line {}: {topic} dates are not consecutive at {}",
                        r.line, r.date
                    )));
                }
            }
            Ok(AlertTrack {
                topic,
                start_date,
                counts: rows.iter().map(|r| r.count).collect(),
                statistic: rows.iter().map(|r| r.statistic).collect(),
                alert: rows.iter().map(|r| r.alert).collect(),
            })
        })
        .collect()
}
