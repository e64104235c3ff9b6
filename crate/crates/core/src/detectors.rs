//! Sliding-baseline aberration detectors: EARS C2, C3, W2, the moving
//! F-statistic and EWMA.
//!
//! Every detector reads a baseline of `baseline_len` days that ends `guard`
//! days before the target. Baseline sums are accumulated as exact integers
//! via prefix sums, so the only rounding happens in the final few float
//! operations per day.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{is_weekend, purge, CountSeries, Topic, DEFAULT_PURGE_CUTOFF};

/// C3 only adds a previous day's C2 value when that day's count is at most
/// its baseline mean plus this many standard deviations.
pub const C3_EXCLUSION_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    C2,
    C3,
    W2,
    Fstat,
    Ewma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::C2,
        Algorithm::C3,
        Algorithm::W2,
        Algorithm::Fstat,
        Algorithm::Ewma,
    ];

    /// Published alert threshold for each statistic.
    pub fn default_threshold(self) -> f64 {
        match self {
            Algorithm::C2 => 0.2,
            Algorithm::C3 => 0.3,
            Algorithm::W2 => 0.2,
            Algorithm::Fstat => 0.6,
            Algorithm::Ewma => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::C2 => "c2",
            Algorithm::C3 => "c3",
            Algorithm::W2 => "w2",
            Algorithm::Fstat => "fstat",
            Algorithm::Ewma => "ewma",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

/// How W2 picks its baseline days.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum W2Strata {
    /// The last `baseline_len` weekdays, whatever the target day.
    #[default]
    WeekdayBaseline,
    /// Weekday targets use weekdays, weekend targets use weekend days.
    PerStratum,
}

impl FromStr for W2Strata {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "weekday-baseline" => Ok(W2Strata::WeekdayBaseline),
            "per-stratum" => Ok(W2Strata::PerStratum),
            other => Err(Error::InvalidConfig(format!("unknown w2 strata {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig<T> {
    pub algorithm: Algorithm,
    pub baseline_len: usize,
    pub guard: usize,
    pub k: T,
    pub lambda: T,
    pub sigma_floor: T,
    pub threshold: T,
    pub fstat_test_len: usize,
    pub purge_cutoff: u64,
    pub w2_strata: W2Strata,
}

impl<T: Scalar> DetectorConfig<T> {
    /// Published defaults: 7-day baseline, 2-day guard, k = 1, λ = 0.2,
    /// σ floor 0.2, purge of counts ≤ 2 and the per-algorithm threshold.
    pub fn new(algorithm: Algorithm) -> Self {
        DetectorConfig {
            algorithm,
            baseline_len: 7,
            guard: 2,
            k: T::one(),
            lambda: T::lit(0.2),
            sigma_floor: T::lit(0.2),
            threshold: T::lit(algorithm.default_threshold()),
            fstat_test_len: 1,
            purge_cutoff: DEFAULT_PURGE_CUTOFF,
            w2_strata: W2Strata::default(),
        }
    }

    pub fn with_threshold(mut self, threshold: T) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.baseline_len < 2 {
            return fail(format!(
                "baseline_len must be >= 2, got {}",
                self.baseline_len
            ));
        }
        if self.fstat_test_len < 1 {
            return fail("fstat_test_len must be >= 1".into());
        }
        if !(self.lambda > T::zero() && self.lambda < T::one()) {
            return fail(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if !(self.sigma_floor.is_finite() && self.sigma_floor > T::zero()) {
            return fail(format!("sigma_floor must be > 0, got {}", self.sigma_floor));
        }
        if !self.k.is_finite() {
            return fail(format!("k must be finite, got {}", self.k));
        }
        if self.threshold.is_nan() {
            return fail("threshold is NaN".into());
        }
        Ok(())
    }
}

impl<T: Scalar> Default for DetectorConfig<T> {
    fn default() -> Self {
        DetectorConfig::new(Algorithm::C2)
    }
}

/// Mean and floored sample standard deviation of one baseline window.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineStats<T> {
    pub mean: T,
    pub stdev: T,
    pub window_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult<T> {
    pub topic: Topic,
    pub start_date: NaiveDate,
    /// `None` on warm-up days.
    pub statistic: Vec<Option<T>>,
    pub alert: Vec<bool>,
    pub config: DetectorConfig<T>,
}

impl<T: Scalar> DetectionResult<T> {
    pub fn len(&self) -> usize {
        self.alert.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alert.is_empty()
    }

    pub fn alert_days(&self) -> usize {
        self.alert.iter().filter(|&&a| a).count()
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.start_date + chrono::Days::new(index as u64)
    }

    /// Re-derive the alert flags for another threshold without recomputing
    /// the statistics.
    pub fn rethreshold(&self, threshold: T) -> Self {
        let alert = self
            .statistic
            .iter()
            .map(|s| s.is_some_and(|v| v > threshold))
            .collect();
        DetectionResult {
            topic: self.topic.clone(),
            start_date: self.start_date,
            statistic: self.statistic.clone(),
            alert,
            config: self.config.clone().with_threshold(threshold),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct WindowSums {
    n: i128,
    sum: i128,
    sumsq: i128,
}

/// Ordered subset of day indices with prefix sums of counts and squares.
struct Stratum {
    members: Vec<usize>,
    sum: Vec<i128>,
    sumsq: Vec<i128>,
}

impl Stratum {
    fn new(counts: &[u64], members: Vec<usize>) -> Self {
        let mut sum = Vec::with_capacity(members.len() + 1);
        let mut sumsq = Vec::with_capacity(members.len() + 1);
        let (mut s, mut q) = (0i128, 0i128);
        sum.push(0);
        sumsq.push(0);
        for &i in &members {
            let c = counts[i] as i128;
            s += c;
            q += c * c;
            sum.push(s);
            sumsq.push(q);
        }
        Stratum {
            members,
            sum,
            sumsq,
        }
    }

    /// Member positions `[lo, hi)` of the last `len` members strictly before
    /// day `cut`, or `None` when fewer exist.
    fn last_before(&self, cut: usize, len: usize) -> Option<(usize, usize)> {
        let hi = self.members.partition_point(|&i| i < cut);
        (hi >= len).then(|| (hi - len, hi))
    }

    fn sums(&self, lo: usize, hi: usize) -> WindowSums {
        WindowSums {
            n: (hi - lo) as i128,
            sum: self.sum[hi] - self.sum[lo],
            sumsq: self.sumsq[hi] - self.sumsq[lo],
        }
    }
}

#[derive(Clone, Copy)]
struct Moments<T> {
    mean: T,
    stdev: T,
}

/// Per-series precomputation shared by all day-level statistics.
struct Engine<'a, T> {
    counts: &'a [u64],
    cfg: &'a DetectorConfig<T>,
    all: Stratum,
    weekday: Stratum,
    weekend: Stratum,
    weekend_flags: Vec<bool>,
    smoothed: Vec<T>,
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(series: &'a CountSeries, cfg: &'a DetectorConfig<T>) -> Self {
        let counts = series.counts();
        let n = counts.len();
        let weekend_flags: Vec<bool> = (0..n).map(|i| is_weekend(series.weekday(i))).collect();
        let (weekend_days, weekdays): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| weekend_flags[i]);
        let smoothed = if cfg.algorithm == Algorithm::Ewma {
            ewma_smooth(counts, cfg.lambda)
        } else {
            Vec::new()
        };
        Engine {
            counts,
            cfg,
            all: Stratum::new(counts, (0..n).collect()),
            weekday: Stratum::new(counts, weekdays),
            weekend: Stratum::new(counts, weekend_days),
            weekend_flags,
            smoothed,
        }
    }

    fn check_day(&self, t: usize) -> Result<()> {
        if t >= self.counts.len() {
            return Err(Error::InvalidSeries(format!(
                "day index {t} past series end ({})",
                self.counts.len()
            )));
        }
        Ok(())
    }

    fn window(&self, stratum: &Stratum, t: usize) -> Option<(usize, usize)> {
        let cut = t.checked_sub(self.cfg.guard)?;
        stratum.last_before(cut, self.cfg.baseline_len)
    }

    fn w2_stratum(&self, t: usize) -> &Stratum {
        match self.cfg.w2_strata {
            W2Strata::PerStratum if self.weekend_flags[t] => &self.weekend,
            _ => &self.weekday,
        }
    }

    /// Sample (n - 1) moments with σ floored.
    fn sample_moments(&self, w: WindowSums) -> Moments<T> {
        let n = T::from_wide(w.n);
        let mean = T::from_wide(w.sum) / n;
        let numer = T::from_wide(w.n * w.sumsq - w.sum * w.sum);
        let var = numer / T::from_wide(w.n * (w.n - 1));
        Moments {
            mean,
            stdev: var.sqrt().max(self.cfg.sigma_floor),
        }
    }

    fn moments_at(&self, stratum: &Stratum, t: usize) -> Option<Moments<T>> {
        let (lo, hi) = self.window(stratum, t)?;
        Some(self.sample_moments(stratum.sums(lo, hi)))
    }

    fn baseline(&self, stratum: &Stratum, t: usize) -> Result<BaselineStats<T>> {
        self.check_day(t)?;
        let (lo, hi) = self
            .window(stratum, t)
            .ok_or(Error::InsufficientHistory { day: t })?;
        let m = self.sample_moments(stratum.sums(lo, hi));
        Ok(BaselineStats {
            mean: m.mean,
            stdev: m.stdev,
            window_indices: stratum.members[lo..hi].to_vec(),
        })
    }

    /// `max(0, (C − (μ + kσ)) / σ)`, evaluated as `(C − μ)/σ − k` so that
    /// integer z-scores come out exact.
    fn exceedance(&self, t: usize, m: Moments<T>) -> T {
        let c = T::from_count(self.counts[t]);
        ((c - m.mean) / m.stdev - self.cfg.k).max(T::zero())
    }

    fn c2(&self, t: usize) -> Option<T> {
        self.moments_at(&self.all, t).map(|m| self.exceedance(t, m))
    }

    fn w2(&self, t: usize) -> Option<T> {
        self.moments_at(self.w2_stratum(t), t)
            .map(|m| self.exceedance(t, m))
    }

    fn c3(&self, t: usize) -> Option<T> {
        let mut total = self.c2(t)?;
        let limit = T::lit(C3_EXCLUSION_SIGMAS);
        for back in 1..=2 {
            let Some(day) = t.checked_sub(back) else {
                break;
            };
            let Some(m) = self.moments_at(&self.all, day) else {
                break;
            };
            if T::from_count(self.counts[day]) <= m.mean + limit * m.stdev {
                total = total + self.exceedance(day, m);
            }
        }
        Some(total)
    }

    fn fstat(&self, t: usize) -> Option<T> {
        let (lo, hi) = self.window(&self.all, t)?;
        let test_lo = (t + 1).checked_sub(self.cfg.fstat_test_len)?;
        let b = self.all.sums(lo, hi);
        let test = self.all.sums(test_lo, t + 1);
        let nb2 = b.n * b.n;
        // Both variances are centred on the baseline mean; scaled by n_b^2 they
        // are exact integers.
        let test_dev = nb2 * test.sumsq - 2 * b.n * b.sum * test.sum + test.n * b.sum * b.sum;
        let base_dev = b.n * b.sumsq - b.sum * b.sum;
        let test_var = T::from_wide(test_dev) / (T::from_wide(nb2) * T::from_wide(test.n));
        let floor = self.cfg.sigma_floor * self.cfg.sigma_floor;
        let base_var = (T::from_wide(base_dev) / T::from_wide(nb2)).max(floor);
        Some(test_var / base_var)
    }

    fn ewma(&self, t: usize) -> Option<T> {
        let m = self.moments_at(&self.all, t)?;
        let lambda = self.cfg.lambda;
        let scale = (lambda / (T::lit(2.0) - lambda)).sqrt();
        Some((self.smoothed[t] - m.mean) / (m.stdev * scale))
    }

    fn statistic(&self, t: usize) -> Option<T> {
        match self.cfg.algorithm {
            Algorithm::C2 => self.c2(t),
            Algorithm::C3 => self.c3(t),
            Algorithm::W2 => self.w2(t),
            Algorithm::Fstat => self.fstat(t),
            Algorithm::Ewma => self.ewma(t),
        }
    }
}

/// EWMA recursion `Y_0 = C_0`, `Y_t = λ·C_t + (1 − λ)·Y_{t−1}`.
pub fn ewma_smooth<T: Scalar>(counts: &[u64], lambda: T) -> Vec<T> {
    let keep = T::one() - lambda;
    let mut out = Vec::with_capacity(counts.len());
    let mut prev: Option<T> = None;
    for &c in counts {
        let c = T::from_count(c);
        let y = match prev {
            None => c,
            Some(p) => lambda * c + keep * p,
        };
        out.push(y);
        prev = Some(y);
    }
    out
}

fn with_engine<T: Scalar, R>(
    series: &CountSeries,
    cfg: &DetectorConfig<T>,
    algorithm: Algorithm,
    t: usize,
    f: impl FnOnce(&Engine<'_, T>) -> Option<R>,
) -> Result<R> {
    let cfg = DetectorConfig {
        algorithm,
        ..cfg.clone()
    };
    cfg.validate()?;
    let engine = Engine::new(series, &cfg);
    engine.check_day(t)?;
    f(&engine).ok_or(Error::InsufficientHistory { day: t })
}

/// Baseline for day `t`: days `[t − guard − baseline_len, t − guard − 1]`.
/// `series` is expected to be purged already.
pub fn baseline<T: Scalar>(
    series: &CountSeries,
    t: usize,
    cfg: &DetectorConfig<T>,
) -> Result<BaselineStats<T>> {
    cfg.validate()?;
    let engine = Engine::new(series, cfg);
    engine.baseline(&engine.all, t)
}

/// Baseline W2 would use for day `t` (weekday days, or same-stratum days
/// under [`W2Strata::PerStratum`]).
pub fn w2_baseline<T: Scalar>(
    series: &CountSeries,
    t: usize,
    cfg: &DetectorConfig<T>,
) -> Result<BaselineStats<T>> {
    cfg.validate()?;
    let engine = Engine::new(series, cfg);
    engine.check_day(t)?;
    engine.baseline(engine.w2_stratum(t), t)
}

pub fn c2_stat<T: Scalar>(series: &CountSeries, t: usize, cfg: &DetectorConfig<T>) -> Result<T> {
    with_engine(series, cfg, Algorithm::C2, t, |e| e.c2(t))
}

/// C2 at `t` plus the C2 values of the two previous days, each only when that
/// day's count stays within its own baseline mean + 3σ. Previous days still in
/// warm-up contribute nothing.
pub fn c3_stat<T: Scalar>(series: &CountSeries, t: usize, cfg: &DetectorConfig<T>) -> Result<T> {
    with_engine(series, cfg, Algorithm::C3, t, |e| e.c3(t))
}

pub fn w2_stat<T: Scalar>(series: &CountSeries, t: usize, cfg: &DetectorConfig<T>) -> Result<T> {
    with_engine(series, cfg, Algorithm::W2, t, |e| e.w2(t))
}

/// Ratio of test-window to baseline-window variance, both centred on the
/// baseline mean with 1/n normalisation. The baseline variance is floored at
/// `sigma_floor²`.
pub fn fstat<T: Scalar>(series: &CountSeries, t: usize, cfg: &DetectorConfig<T>) -> Result<T> {
    with_engine(series, cfg, Algorithm::Fstat, t, |e| e.fstat(t))
}

pub fn ewma_stat<T: Scalar>(series: &CountSeries, t: usize, cfg: &DetectorConfig<T>) -> Result<T> {
    with_engine(series, cfg, Algorithm::Ewma, t, |e| e.ewma(t))
}

/// Purge the series once, then score every day. Warm-up days get no
/// statistic and never alert; other days alert when the statistic strictly
/// exceeds the threshold.
pub fn detect<T: Scalar>(
    series: &CountSeries,
    cfg: &DetectorConfig<T>,
) -> Result<DetectionResult<T>> {
    cfg.validate()?;
    let purged = purge(series, cfg.purge_cutoff);
    let engine = Engine::new(&purged, cfg);
    let statistic: Vec<Option<T>> = (0..purged.len()).map(|t| engine.statistic(t)).collect();
    let alert = statistic
        .iter()
        .map(|s| s.is_some_and(|v| v > cfg.threshold))
        .collect();
    Ok(DetectionResult {
        topic: series.topic().clone(),
        start_date: series.start_date(),
        statistic,
        alert,
        config: cfg.clone(),
    })
}

/// Weekday index, Monday = 0.
pub(crate) fn weekday_slot(date: NaiveDate) -> usize {
    date.weekday().num_days_from_monday() as usize
}
