//! Scoring alerts against gold postings.
//!
//! Each posting opens a qualifying window of the 7 days ending on (and
//! including) the posting date. A posting is a true positive when any alert
//! falls inside its window, otherwise a false negative. Days outside every
//! window are false positives when alerted and true negatives otherwise.

use std::ops::Add;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::detectors::{weekday_slot, DetectionResult};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{CountSeries, GoldStandard, Topic};

pub const QUALIFYING_WINDOW_DAYS: u64 = 7;

/// Two-sided 95% normal quantile used for the Wilson intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Inclusive calendar date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidEvaluation(format!(
                "empty range {start}..={end}"
            )));
        }
        Ok(DateRange { start, end })
    }

    pub fn of_series(series: &CountSeries) -> Self {
        DateRange {
            start: series.start_date(),
            end: series.end_date(),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QualifyingWindow {
    pub posting_date: NaiveDate,
    pub first_day: NaiveDate,
}

impl QualifyingWindow {
    pub fn new(posting_date: NaiveDate) -> Self {
        QualifyingWindow {
            posting_date,
            first_day: posting_date - Days::new(QUALIFYING_WINDOW_DAYS - 1),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.first_day <= date && date <= self.posting_date
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> {
        let first = self.first_day;
        (0..QUALIFYING_WINDOW_DAYS).map(move |i| first + Days::new(i))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionTally {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Add for ConfusionTally {
    type Output = ConfusionTally;
    fn add(self, o: ConfusionTally) -> ConfusionTally {
        ConfusionTally {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionTally {
    fn sum<I: Iterator<Item = ConfusionTally>>(iter: I) -> Self {
        iter.fold(ConfusionTally::default(), Add::add)
    }
}

/// Align a day-indexed alert track starting at `start_date` with gold
/// postings, counting only days inside `period`.
pub fn align_alerts(
    topic: &Topic,
    start_date: NaiveDate,
    alerts: &[bool],
    gold: &GoldStandard,
    period: DateRange,
) -> Result<ConfusionTally> {
    if topic != gold.topic() {
        return Err(Error::TopicMismatch {
            left: topic.to_string(),
            right: gold.topic().to_string(),
        });
    }
    if alerts.is_empty() {
        return Err(Error::InvalidEvaluation(format!(
            "{topic}: no days to score"
        )));
    }
    let track = DateRange {
        start: start_date,
        end: start_date + Days::new(alerts.len() as u64 - 1),
    };
    if !track.contains(period.start) || !track.contains(period.end) {
        return Err(Error::InvalidEvaluation(format!(
            "{topic}: period {}..={} not inside series {}..={}",
            period.start, period.end, track.start, track.end
        )));
    }
    for &p in gold.posting_dates() {
        if !period.contains(p) {
            return Err(Error::DateOutOfRange {
                date: p,
                start: period.start,
                end: period.end,
            });
        }
    }

    let offset = (period.start - start_date).num_days() as usize;
    let days = period.days();
    let alerted = &alerts[offset..offset + days];
    let day_of = |d: NaiveDate| (d - period.start).num_days();
    let mut in_window = vec![false; days];
    let mut tally = ConfusionTally::default();

    for &posting in gold.posting_dates() {
        let w = QualifyingWindow::new(posting);
        let lo = day_of(w.first_day).max(0) as usize;
        let hi = day_of(w.posting_date) as usize;
        in_window[lo..=hi].iter_mut().for_each(|f| *f = true);
        if alerted[lo..=hi].iter().any(|&a| a) {
            tally.tp += 1;
        } else {
            tally.fn_ += 1;
        }
    }
    for (&a, &w) in alerted.iter().zip(&in_window) {
        match (w, a) {
            (true, _) => {}
            (false, true) => tally.fp += 1,
            (false, false) => tally.tn += 1,
        }
    }
    Ok(tally)
}

pub fn align<T: Scalar>(
    result: &DetectionResult<T>,
    gold: &GoldStandard,
    period: DateRange,
) -> Result<ConfusionTally> {
    align_alerts(
        &result.topic,
        result.start_date,
        &result.alert,
        gold,
        period,
    )
}

/// A metric value with its 95% interval; the interval is absent for F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue<T> {
    pub value: T,
    pub ci_low: Option<T>,
    pub ci_high: Option<T>,
}

/// Undefined metrics (zero denominators) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport<T> {
    pub tally: ConfusionTally,
    pub days_observed: u64,
    pub alert_days: u64,
    pub sensitivity: Option<MetricValue<T>>,
    pub specificity: Option<MetricValue<T>>,
    pub ppv: Option<MetricValue<T>>,
    pub npv: Option<MetricValue<T>>,
    pub f1: Option<MetricValue<T>>,
    pub alarms_per_100_days: T,
}

/// Wilson score interval for `hits` successes out of `n` trials.
pub fn wilson_interval<T: Scalar>(hits: u64, n: u64) -> (T, T) {
    debug_assert!(n > 0 && hits <= n);
    let z = T::lit(Z_95);
    let n_t = T::from_count(n);
    let p = T::from_count(hits) / n_t;
    let z2 = z * z;
    let two = T::lit(2.0);
    let denom = T::one() + z2 / n_t;
    let centre = (p + z2 / (two * n_t)) / denom;
    let half = z / denom * (p * (T::one() - p) / n_t + z2 / (T::lit(4.0) * n_t * n_t)).sqrt();
    (
        (centre - half).max(T::zero()),
        (centre + half).min(T::one()),
    )
}

fn proportion<T: Scalar>(hits: u64, n: u64) -> Option<MetricValue<T>> {
    (n > 0).then(|| {
        let (lo, hi) = wilson_interval(hits, n);
        MetricValue {
            value: T::from_count(hits) / T::from_count(n),
            ci_low: Some(lo),
            ci_high: Some(hi),
        }
    })
}

/// F1 is undefined when PPV or sensitivity is; when both are zero it is 0,
/// matching the equivalent form `2TP / (2TP + FP + FN)`.
fn f1_of<T: Scalar>(ppv: Option<T>, sens: Option<T>) -> Option<MetricValue<T>> {
    let (p, s) = (ppv?, sens?);
    let sum = p + s;
    let value = if sum > T::zero() {
        T::lit(2.0) * p * s / sum
    } else {
        T::zero()
    };
    Some(MetricValue {
        value,
        ci_low: None,
        ci_high: None,
    })
}

pub fn metrics<T: Scalar>(
    tally: ConfusionTally,
    days_observed: u64,
    alert_days: u64,
) -> Result<EvaluationReport<T>> {
    if days_observed == 0 {
        return Err(Error::InvalidEvaluation("days_observed must be > 0".into()));
    }
    let sensitivity = proportion(tally.tp, tally.tp + tally.fn_);
    let specificity = proportion(tally.tn, tally.tn + tally.fp);
    let ppv = proportion(tally.tp, tally.tp + tally.fp);
    let npv = proportion(tally.tn, tally.tn + tally.fn_);
    let f1 = f1_of(
        ppv.map(|m: MetricValue<T>| m.value),
        sensitivity.map(|m: MetricValue<T>| m.value),
    );
    Ok(EvaluationReport {
        tally,
        days_observed,
        alert_days,
        sensitivity,
        specificity,
        ppv,
        npv,
        f1,
        alarms_per_100_days: alarms_per_100::<T>(alert_days, days_observed),
    })
}

fn alarms_per_100<T: Scalar>(alert_days: u64, days: u64) -> T {
    T::lit(100.0) * T::from_count(alert_days) / T::from_count(days)
}

/// One dataset's contribution to an aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetScore {
    pub tally: ConfusionTally,
    pub days_observed: u64,
    pub alert_days: u64,
}

/// Pooled metrics over summed tallies. Alarms per 100 days is the mean of the
/// per-dataset rates.
pub fn aggregate<T: Scalar>(scores: &[DatasetScore]) -> Result<EvaluationReport<T>> {
    if scores.is_empty() {
        return Err(Error::InvalidEvaluation("nothing to aggregate".into()));
    }
    if scores.iter().any(|s| s.days_observed == 0) {
        return Err(Error::InvalidEvaluation(
            "dataset with no observed days".into(),
        ));
    }
    let tally = scores.iter().map(|s| s.tally).sum();
    let days = scores.iter().map(|s| s.days_observed).sum();
    let alerts = scores.iter().map(|s| s.alert_days).sum();
    let mut report = metrics::<T>(tally, days, alerts)?;
    let rate_sum = scores
        .iter()
        .map(|s| alarms_per_100::<T>(s.alert_days, s.days_observed))
        .fold(T::zero(), |a, b| a + b);
    report.alarms_per_100_days = rate_sum / T::from_usize_lossy(scores.len());
    Ok(report)
}

/// Detect-align-score one dataset over the detection result's full span.
pub fn score<T: Scalar>(result: &DetectionResult<T>, gold: &GoldStandard) -> Result<DatasetScore> {
    let period = DateRange {
        start: result.start_date,
        end: result.date(result.len().saturating_sub(1)),
    };
    let tally = align(result, gold, period)?;
    Ok(DatasetScore {
        tally,
        days_observed: period.days() as u64,
        alert_days: result.alert_days() as u64,
    })
}

/// Mean of a per-day value by weekday (Monday first); `None` for weekdays
/// never observed.
pub fn weekday_means<I>(days: I) -> [Option<f64>; 7]
where
    I: IntoIterator<Item = (NaiveDate, f64)>,
{
    let mut sum = [0.0f64; 7];
    let mut n = [0u64; 7];
    for (date, v) in days {
        let slot = weekday_slot(date);
        sum[slot] += v;
        n[slot] += 1;
    }
    std::array::from_fn(|i| (n[i] > 0).then(|| sum[i] / n[i] as f64))
}

/// Fraction of days alerted, per weekday, pooled over all results.
pub fn weekday_profile<T: Scalar>(results: &[DetectionResult<T>]) -> [Option<f64>; 7] {
    weekday_means(results.iter().flat_map(|r| {
        r.alert
            .iter()
            .enumerate()
            .map(move |(i, &a)| (r.date(i), if a { 1.0 } else { 0.0 }))
    }))
}

/// Mean raw count per weekday, pooled over all series.
pub fn count_profile(series: &[CountSeries]) -> [Option<f64>; 7] {
    weekday_means(series.iter().flat_map(|s| {
        s.counts()
            .iter()
            .enumerate()
            .map(move |(i, &c)| (s.date(i), c as f64))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn topic() -> Topic {
        Topic::new("cholera", "zimbabwe").unwrap()
    }

    fn period(start: &str, days: u64) -> DateRange {
        let s = d(start);
        DateRange::new(s, s + Days::new(days - 1)).unwrap()
    }

    #[test]
    fn window_is_seven_days_ending_on_posting() {
        let w = QualifyingWindow::new(d("2008-08-10"));
        let dates: Vec<_> = w.dates().collect();
        assert_eq!(dates.len(), 7);
        assert_eq!(dates[0], d("2008-08-04"));
        assert_eq!(*dates.last().unwrap(), d("2008-08-10"));
    }

    #[test]
    fn single_posting_alert_three_days_before() {
        let mut alerts = vec![false; 100];
        alerts[47] = true;
        let gold = GoldStandard::new(topic(), vec![d("2008-01-01") + Days::new(50)]);
        let t = align_alerts(
            &topic(),
            d("2008-01-01"),
            &alerts,
            &gold,
            period("2008-01-01", 100),
        )
        .unwrap();
        assert_eq!(
            t,
            ConfusionTally {
                tp: 1,
                fp: 0,
                fn_: 0,
                tn: 93
            }
        );
    }

    #[test]
    fn no_postings_no_alerts() {
        let gold = GoldStandard::empty(topic());
        let t = align_alerts(
            &topic(),
            d("2008-01-01"),
            &[false; 30],
            &gold,
            period("2008-01-01", 30),
        )
        .unwrap();
        assert_eq!(
            t,
            ConfusionTally {
                tp: 0,
                fp: 0,
                fn_: 0,
                tn: 30
            }
        );
    }

    #[test]
    fn overlapping_windows_share_one_alert() {
        let mut alerts = vec![false; 40];
        alerts[20] = true;
        let start = d("2008-01-01");
        let gold = GoldStandard::new(topic(), vec![start + Days::new(21), start + Days::new(24)]);
        let t = align_alerts(&topic(), start, &alerts, &gold, period("2008-01-01", 40)).unwrap();
        assert_eq!((t.tp, t.fn_, t.fp), (2, 0, 0));
        // Union of windows covers days 15..=24.
        assert_eq!(t.tn, 30);
    }

    #[test]
    fn window_clipped_at_period_start() {
        let start = d("2008-01-01");
        let mut alerts = vec![false; 20];
        alerts[0] = true;
        let gold = GoldStandard::new(topic(), vec![start + Days::new(2)]);
        let t = align_alerts(&topic(), start, &alerts, &gold, period("2008-01-01", 20)).unwrap();
        assert_eq!(
            t,
            ConfusionTally {
                tp: 1,
                fp: 0,
                fn_: 0,
                tn: 17
            }
        );
    }

    #[test]
    fn align_errors() {
        let other = GoldStandard::empty(Topic::new("ebola", "congo").unwrap());
        assert!(matches!(
            align_alerts(
                &topic(),
                d("2008-01-01"),
                &[false; 5],
                &other,
                period("2008-01-01", 5)
            ),
            Err(Error::TopicMismatch { .. })
        ));
        let late = GoldStandard::new(topic(), vec![d("2008-02-01")]);
        assert!(matches!(
            align_alerts(
                &topic(),
                d("2008-01-01"),
                &[false; 5],
                &late,
                period("2008-01-01", 5)
            ),
            Err(Error::DateOutOfRange { .. })
        ));
        let gold = GoldStandard::empty(topic());
        assert!(align_alerts(
            &topic(),
            d("2008-01-01"),
            &[false; 5],
            &gold,
            period("2008-01-01", 6)
        )
        .is_err());
    }

    #[test]
    fn metric_arithmetic() {
        let t = ConfusionTally {
            tp: 3,
            fp: 2,
            fn_: 1,
            tn: 94,
        };
        let r = metrics::<f64>(t, 100, 5).unwrap();
        assert_eq!(r.sensitivity.unwrap().value, 0.75);
        assert_eq!(r.ppv.unwrap().value, 0.6);
        assert!((r.f1.unwrap().value - 0.9 / 1.35).abs() < 1e-12);
        assert!((r.specificity.unwrap().value - 94.0 / 96.0).abs() < 1e-12);
        assert!((r.npv.unwrap().value - 94.0 / 95.0).abs() < 1e-12);
        assert_eq!(r.alarms_per_100_days, 5.0);
        assert!(r.f1.unwrap().ci_low.is_none());
    }

    #[test]
    fn zero_denominators_are_undefined() {
        let t = ConfusionTally {
            tp: 0,
            fp: 0,
            fn_: 4,
            tn: 50,
        };
        let r = metrics::<f64>(t, 78, 0).unwrap();
        assert!(r.ppv.is_none());
        assert!(r.f1.is_none());
        assert_eq!(r.sensitivity.unwrap().value, 0.0);
        assert!(metrics::<f64>(t, 0, 0).is_err());
        let all_false = ConfusionTally {
            tp: 0,
            fp: 3,
            fn_: 2,
            tn: 10,
        };
        assert_eq!(
            metrics::<f64>(all_false, 20, 3).unwrap().f1.unwrap().value,
            0.0
        );
    }

    #[test]
    fn alarms_per_100_days() {
        let r = metrics::<f64>(ConfusionTally::default(), 366, 16).unwrap();
        assert!((r.alarms_per_100_days - 4.3716).abs() < 1e-3);
    }

    #[test]
    fn wilson_reference_values() {
        // Closed-form Wilson bounds at z = 1.96, computed independently.
        let (lo, hi) = wilson_interval::<f64>(8, 10);
        assert!((lo - 0.4902).abs() < 1e-4, "{lo}");
        assert!((hi - 0.9433).abs() < 1e-4, "{hi}");
        let (lo, hi) = wilson_interval::<f64>(0, 20);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.1611).abs() < 1e-4, "{hi}");
        let (lo, hi) = wilson_interval::<f64>(20, 20);
        assert!(hi <= 1.0 && lo > 0.8);
    }

    #[test]
    fn aggregate_pools_tallies() {
        let a = DatasetScore {
            tally: ConfusionTally {
                tp: 9,
                fp: 1,
                fn_: 1,
                tn: 89,
            },
            days_observed: 100,
            alert_days: 10,
        };
        let b = DatasetScore {
            tally: ConfusionTally {
                tp: 1,
                fp: 0,
                fn_: 9,
                tn: 190,
            },
            days_observed: 200,
            alert_days: 1,
        };
        let single = aggregate::<f64>(&[a]).unwrap();
        assert_eq!(single, metrics::<f64>(a.tally, 100, 10).unwrap());
        let twice = aggregate::<f64>(&[a, a]).unwrap();
        assert_eq!(
            twice.sensitivity.unwrap().value,
            single.sensitivity.unwrap().value
        );
        assert_eq!(twice.ppv.unwrap().value, single.ppv.unwrap().value);
        let pooled = aggregate::<f64>(&[a, b]).unwrap();
        // Brute-force pooled: (9 + 1) / (10 + 10) = 0.5; per-dataset mean is also
        // 0.5 here, PPV differs: pooled 10/11 vs mean (0.9 + 1.0)/2.
        assert_eq!(pooled.sensitivity.unwrap().value, 0.5);
        assert!((pooled.ppv.unwrap().value - 10.0 / 11.0).abs() < 1e-12);
        assert!((pooled.ppv.unwrap().value - 0.95).abs() > 0.01);
        assert!((pooled.alarms_per_100_days - (10.0 + 0.5) / 2.0).abs() < 1e-12);
        assert!(aggregate::<f64>(&[]).is_err());
    }

    #[test]
    fn weekday_profile_thursdays_only() {
        // 2009-01-05 is Monday; Thursdays are indices 3, 10, 17, ...
        let start = d("2009-01-05");
        let counts = vec![0u64; 28];
        let series = CountSeries::new(topic(), start, counts).unwrap();
        let cfg = crate::detectors::DetectorConfig::<f64>::new(crate::Algorithm::C2);
        let mut r = crate::detect(&series, &cfg).unwrap();
        r.alert = (0..28).map(|i| i % 7 == 3).collect();
        let p = weekday_profile(&[r]);
        for (i, v) in p.iter().enumerate() {
            assert_eq!(v.unwrap(), if i == 3 { 1.0 } else { 0.0 });
        }
    }
}
