//! Topic count series, gold postings, CSV ingestion and the low-count purge.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COUNTS_HEADER: [&str; 4] = ["disease", "country", "date", "count"];
pub const GOLD_HEADER: [&str; 3] = ["disease", "country", "date"];

/// Default purge cutoff: daily counts of 1 or 2 are zeroed.
pub const DEFAULT_PURGE_CUTOFF: u64 = 2;

/// A disease-country pair. Both names are stored trimmed and lowercased, so
/// equality and ordering are case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTopic", into = "RawTopic")]
pub struct Topic {
    disease: String,
    country: String,
}

#[derive(Serialize, Deserialize)]
struct RawTopic {
    disease: String,
    country: String,
}

impl TryFrom<RawTopic> for Topic {
    type Error = Error;
    fn try_from(raw: RawTopic) -> Result<Self> {
        Topic::new(&raw.disease, &raw.country)
    }
}

impl From<Topic> for RawTopic {
    fn from(t: Topic) -> Self {
        RawTopic {
            disease: t.disease,
            country: t.country,
        }
    }
}

impl Topic {
    pub fn new(disease: &str, country: &str) -> Result<Self> {
        let disease = disease.trim().to_lowercase();
        let country = country.trim().to_lowercase();
        if disease.is_empty() || country.is_empty() {
            return Err(Error::InvalidTopic(format!(
                "empty disease or country in ({disease:?}, {country:?})"
            )));
        }
        Ok(Topic { disease, country })
    }

    pub fn disease(&self) -> &str {
        &self.disease
    }

    pub fn country(&self) -> &str {
        &self.country
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.disease, self.country)
    }
}

pub fn is_weekend(day: Weekday) -> bool {
    matches!(day, Weekday::Sat | Weekday::Sun)
}

/// Gapless daily document counts for one topic, starting at `start_date`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSeries {
    topic: Topic,
    start_date: NaiveDate,
    counts: Vec<u64>,
}

impl CountSeries {
    pub fn new(topic: Topic, start_date: NaiveDate, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidSeries(format!("{topic}: empty count series")));
        }
        if start_date
            .checked_add_days(Days::new(counts.len() as u64 - 1))
            .is_none()
        {
            return Err(Error::InvalidSeries(format!(
                "{topic}: date range overflows"
            )));
        }
        Ok(CountSeries {
            topic,
            start_date,
            counts,
        })
    }

    pub fn topic(&self) -> &Topic {
        &self.topic
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date(self.counts.len() - 1)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Always false; a series holds at least one day.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.start_date + Days::new(index as u64)
    }

    pub fn weekday(&self, index: usize) -> Weekday {
        self.date(index).weekday()
    }

    /// Index of `date`, if it lies within the series.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start_date).num_days();
        (offset >= 0 && (offset as usize) < self.counts.len()).then_some(offset as usize)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.counts.len()).map(move |i| self.date(i))
    }

    pub(crate) fn with_counts(&self, counts: Vec<u64>) -> CountSeries {
        debug_assert_eq!(counts.len(), self.counts.len());
        CountSeries {
            topic: self.topic.clone(),
            start_date: self.start_date,
            counts,
        }
    }
}

/// Dated gold-standard postings for one topic, sorted with same-day
/// duplicates collapsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldStandard {
    topic: Topic,
    posting_dates: Vec<NaiveDate>,
}

impl GoldStandard {
    pub fn new(topic: Topic, mut posting_dates: Vec<NaiveDate>) -> Self {
        posting_dates.sort_unstable();
        posting_dates.dedup();
        GoldStandard {
            topic,
            posting_dates,
        }
    }

    pub fn empty(topic: Topic) -> Self {
        GoldStandard::new(topic, Vec::new())
    }

    pub fn topic(&self) -> &Topic {
        &self.topic
    }

    pub fn posting_dates(&self) -> &[NaiveDate] {
        &self.posting_dates
    }
}

/// Zero every count `c` with `0 < c <= cutoff`; larger counts are kept.
pub fn purge(series: &CountSeries, cutoff: u64) -> CountSeries {
    let counts = series
        .counts
        .iter()
        .map(|&c| if c <= cutoff { 0 } else { c })
        .collect();
    series.with_counts(counts)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Returns false when the input had no header (empty input).
fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<bool> {
    let headers = rdr.headers()?;
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(false);
    }
    let matches = headers.len() == expected.len()
        && headers
            .iter()
            .zip(expected)
            .all(|(h, e)| h.eq_ignore_ascii_case(e));
    if !matches {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(true)
}

fn parse_date(field: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(field, "%Y-%m-%d").map_err(|e| Error::Parse {
        line,
        message: format!("bad date {field:?}: {e}"),
    })
}

fn parse_topic(record: &csv::StringRecord, line: u64) -> Result<Topic> {
    Topic::new(&record[0], &record[1]).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })
}

fn check_width(record: &csv::StringRecord, width: usize) -> Result<u64> {
    let line = line_of(record);
    if record.len() != width {
        return Err(Error::Parse {
            line,
            message: format!("expected {width} columns, found {}", record.len()),
        });
    }
    Ok(line)
}

/// Parse the counts CSV (`disease,country,date,count`) into one gapless series
/// per topic, ordered by topic. Missing days inside a topic's observed range
/// are zero; repeated topic+date rows are summed.
pub fn parse_counts<R: Read>(input: R) -> Result<Vec<CountSeries>> {
    let mut rdr = reader(input);
    if !check_header(&mut rdr, &COUNTS_HEADER)? {
        return Ok(Vec::new());
    }
    let mut by_topic: BTreeMap<Topic, BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = check_width(&record, 4)?;
        let topic = parse_topic(&record, line)?;
        let date = parse_date(&record[2], line)?;
        let value: i64 = record[3].parse().map_err(|_| Error::Parse {
            line,
            message: format!("count {:?} is not an integer", &record[3]),
        })?;
        if value < 0 {
            return Err(Error::NegativeCount { line, value });
        }
        let slot = by_topic.entry(topic).or_default().entry(date).or_insert(0);
        *slot = slot.checked_add(value as u64).ok_or_else(|| Error::Parse {
            line,
            message: "count overflow".into(),
        })?;
    }

    by_topic
        .into_iter()
        .map(|(topic, days)| {
            let (&first, _) = days.first_key_value().expect("non-empty topic");
            let (&last, _) = days.last_key_value().expect("non-empty topic");
            let len = (last - first).num_days() as usize + 1;
            let mut counts = vec![0u64; len];
            for (date, c) in days {
                counts[(date - first).num_days() as usize] = c;
            }
            CountSeries::new(topic, first, counts)
        })
        .collect()
}

/// Parse the gold CSV (`disease,country,date`), one entry per topic.
pub fn parse_gold<R: Read>(input: R) -> Result<Vec<GoldStandard>> {
    let mut rdr = reader(input);
    if !check_header(&mut rdr, &GOLD_HEADER)? {
        return Ok(Vec::new());
    }
    let mut by_topic: BTreeMap<Topic, Vec<NaiveDate>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = check_width(&record, 3)?;
        let topic = parse_topic(&record, line)?;
        let date = parse_date(&record[2], line)?;
        by_topic.entry(topic).or_default().push(date);
    }
    Ok(by_topic
        .into_iter()
        .map(|(topic, dates)| GoldStandard::new(topic, dates))
        .collect())
}

/// Write series in the counts CSV format, every day of every series included.
pub fn write_counts<W: Write>(series: &[CountSeries], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COUNTS_HEADER)?;
    for s in series {
        for (i, &c) in s.counts.iter().enumerate() {
            w.write_record([
                s.topic.disease(),
                s.topic.country(),
                &s.date(i).format("%Y-%m-%d").to_string(),
                &c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_gold<W: Write>(gold: &[GoldStandard], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GOLD_HEADER)?;
    for g in gold {
        for d in &g.posting_dates {
            w.write_record([
                g.topic.disease(),
                g.topic.country(),
                &d.format("%Y-%m-%d").to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn series(counts: Vec<u64>) -> CountSeries {
        CountSeries::new(
            Topic::new("dengue", "brazil").unwrap(),
            d("2008-07-01"),
            counts,
        )
        .unwrap()
    }

    #[test]
    fn purge_zeroes_one_and_two() {
        assert_eq!(
            purge(&series(vec![0, 1, 2, 3, 4]), 2).counts(),
            &[0, 0, 0, 3, 4]
        );
        assert_eq!(purge(&series(vec![5, 6, 7]), 0).counts(), &[5, 6, 7]);
        assert_eq!(purge(&series(vec![2, 2, 2, 2]), 2).counts(), &[0, 0, 0, 0]);
    }

    #[test]
    fn topic_is_case_insensitive() {
        let a = Topic::new(" Dengue ", "BRAZIL").unwrap();
        let b = Topic::new("dengue", "brazil").unwrap();
        assert_eq!(a, b);
        assert!(Topic::new("  ", "brazil").is_err());
        assert!(Topic::new("dengue", "").is_err());
    }

    #[test]
    fn counts_gap_fill_and_merge() {
        let csv = "disease,country,date,count\n\
                   dengue,brazil,2008-07-01,3\n\
                   dengue,brazil,2008-07-03,5\n\
                   Dengue,Brazil,2008-07-03,2\n";
        let out = parse_counts(csv.as_bytes()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].counts(), &[3, 0, 7]);
        assert_eq!(out[0].start_date(), d("2008-07-01"));
    }

    #[test]
    fn counts_errors_name_the_line() {
        let neg = "disease,country,date,count\ndengue,brazil,2008-07-01,-1\n";
        match parse_counts(neg.as_bytes()) {
            Err(Error::NegativeCount { line: 2, value: -1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let cols = "disease,country,date,count\ndengue,brazil,2008-07-01,1\ndengue,brazil\n";
        assert!(matches!(
            parse_counts(cols.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad = "disease,country,date,count\ndengue,brazil,2008-07-01,x\n";
        assert!(matches!(
            parse_counts(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let date = "disease,country,date,count\ndengue,brazil,07/01/2008,1\n";
        assert!(matches!(
            parse_counts(date.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let header = "a,b,c,d\n";
        assert!(matches!(
            parse_counts(header.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn gold_sorted_and_deduped() {
        let csv = "disease,country,date\nebola,congo,2008-08-05\nebola,congo,2008-08-05\nebola,congo,2008-08-01\n";
        let g = parse_gold(csv.as_bytes()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].posting_dates(), &[d("2008-08-01"), d("2008-08-05")]);
        assert!(parse_gold("".as_bytes()).unwrap().is_empty());
        assert!(parse_gold("disease,country,date\n".as_bytes())
            .unwrap()
            .is_empty());
        let bad = "disease,country,date\nebola,congo,2008-13-40\n";
        assert!(matches!(
            parse_gold(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn weekday_from_start_date() {
        // 2008-07-01 was a Tuesday.
        let s = series(vec![0; 7]);
        assert_eq!(s.weekday(0), Weekday::Tue);
        assert_eq!(s.weekday(4), Weekday::Sat);
        assert!(is_weekend(s.weekday(5)));
        assert_eq!(s.index_of(d("2008-07-07")), Some(6));
        assert_eq!(s.index_of(d("2008-07-08")), None);
        assert_eq!(s.index_of(d("2008-06-30")), None);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<(u8, u16, u32)>> {
        prop::collection::vec((0u8..3, 0u16..60, 0u32..20), 1..40)
    }

    proptest! {
        #[test]
        fn purge_is_idempotent_and_monotone(counts in prop::collection::vec(0u64..10, 1..50), cutoff in 0u64..5) {
            let s = series(counts);
            let once = purge(&s, cutoff);
            prop_assert_eq!(&purge(&once, cutoff), &once);
            for (&a, &b) in s.counts().iter().zip(once.counts()) {
                prop_assert!(b <= a);
                if a > cutoff { prop_assert_eq!(a, b); }
            }
        }

        #[test]
        fn parsed_length_spans_range_and_round_trips(rows in arb_rows()) {
            let diseases = ["dengue", "ebola", "flu"];
            let base = d("2009-01-01");
            let mut text = String::from("disease,country,date,count\n");
            let mut spans: BTreeMap<&str, (u16, u16)> = BTreeMap::new();
            for &(t, off, c) in &rows {
                let name = diseases[t as usize];
                let e = spans.entry(name).or_insert((off, off));
                e.0 = e.0.min(off);
                e.1 = e.1.max(off);
                text.push_str(&format!("{name},x,{},{c}\n", base + Days::new(off as u64)));
            }
            let parsed = parse_counts(text.as_bytes()).unwrap();
            prop_assert_eq!(parsed.len(), spans.len());
            for s in &parsed {
                let (lo, hi) = spans[s.topic().disease()];
                prop_assert_eq!(s.len(), (hi - lo) as usize + 1);
            }
            let mut buf = Vec::new();
            write_counts(&parsed, &mut buf).unwrap();
            prop_assert_eq!(parse_counts(buf.as_slice()).unwrap(), parsed);
        }
    }
}
