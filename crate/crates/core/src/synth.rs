//! Seeded synthetic count series with day-of-week volume, outbreak shapes
//! and reporting sinks.
//!
//! Random source: ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`, which expands the 64-bit seed with PCG32 as
//! specified by `rand_core`. Uniforms are `((next_u64 >> 11) + 1) * 2^-53`,
//! i.e. in (0, 1]. Poisson variates use Knuth's multiplication method; means
//! above 30 are split into equal chunks of at most 30 whose draws are summed.
//! One Poisson variate is drawn per day, in day order, before any outbreak
//! is added, so outbreaks never shift the noise stream.

use chrono::{Datelike, NaiveDate};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{is_weekend, CountSeries, GoldStandard, Topic};

pub const DEFAULT_WEEKDAY_MEAN: f64 = 1.37;
pub const DEFAULT_WEEKEND_MEAN: f64 = 0.49;
const POISSON_CHUNK: f64 = 30.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    #[default]
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OutbreakShape {
    /// `height` extra documents per day for `duration_days` days.
    Spike { height: f64, duration_days: usize },
    /// Linear ramp up to `peak` over `rise_days`, then linear decay over
    /// `fall_days`.
    Slope {
        peak: f64,
        rise_days: usize,
        fall_days: usize,
    },
}

impl OutbreakShape {
    /// Integer contribution per outbreak day, values rounded half away from zero.
    ///
    /// Rise day `j` is `peak·(j+1)/rise_days`; fall day `j` is
    /// `peak·(fall_days−j)/(fall_days+1)`.
    pub fn profile(&self) -> Vec<u64> {
        let values: Vec<f64> = match *self {
            OutbreakShape::Spike {
                height,
                duration_days,
            } => vec![height; duration_days],
            OutbreakShape::Slope {
                peak,
                rise_days,
                fall_days,
            } => {
                let rise = (0..rise_days).map(|j| peak * (j + 1) as f64 / rise_days as f64);
                let fall =
                    (0..fall_days).map(|j| peak * (fall_days - j) as f64 / (fall_days + 1) as f64);
                rise.chain(fall).collect()
            }
        };
        values.into_iter().map(|v| v.round() as u64).collect()
    }

    pub fn duration(&self) -> usize {
        match *self {
            OutbreakShape::Spike { duration_days, .. } => duration_days,
            OutbreakShape::Slope {
                rise_days,
                fall_days,
                ..
            } => rise_days + fall_days,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.into()));
        match *self {
            OutbreakShape::Spike {
                height,
                duration_days,
            } => {
                if !(height.is_finite() && height >= 0.0) {
                    return bad("spike height must be finite and >= 0");
                }
                if duration_days == 0 {
                    return bad("spike duration must be >= 1 day");
                }
            }
            OutbreakShape::Slope {
                peak, rise_days, ..
            } => {
                if !(peak.is_finite() && peak >= 0.0) {
                    return bad("slope peak must be finite and >= 0");
                }
                if rise_days == 0 {
                    return bad("slope rise must be >= 1 day");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutbreakSpec {
    pub onset_day: usize,
    pub shape: OutbreakShape,
    /// Gold posting date relative to onset.
    #[serde(default)]
    pub gold_lag_days: usize,
}

fn default_weekday_mean() -> f64 {
    DEFAULT_WEEKDAY_MEAN
}

fn default_weekend_mean() -> f64 {
    DEFAULT_WEEKEND_MEAN
}

fn default_disease() -> String {
    "synthetic".into()
}

fn default_country() -> String {
    "simland".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub length_days: usize,
    pub start_date: NaiveDate,
    #[serde(default = "default_weekday_mean")]
    pub weekday_mean: f64,
    #[serde(default = "default_weekend_mean")]
    pub weekend_mean: f64,
    #[serde(default)]
    pub outbreaks: Vec<OutbreakSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default = "default_disease")]
    pub disease: String,
    #[serde(default = "default_country")]
    pub country: String,
}

impl ScenarioSpec {
    pub fn new(length_days: usize, start_date: NaiveDate, seed: u64) -> Self {
        ScenarioSpec {
            length_days,
            start_date,
            weekday_mean: DEFAULT_WEEKDAY_MEAN,
            weekend_mean: DEFAULT_WEEKEND_MEAN,
            outbreaks: Vec::new(),
            seed,
            noise: NoiseModel::Poisson,
            disease: default_disease(),
            country: default_country(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.length_days == 0 {
            return bad("length_days must be >= 1".into());
        }
        for (name, m) in [
            ("weekday_mean", self.weekday_mean),
            ("weekend_mean", self.weekend_mean),
        ] {
            if !(m.is_finite() && m >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {m}"));
            }
        }
        for (i, o) in self.outbreaks.iter().enumerate() {
            o.shape.validate()?;
            if o.onset_day + o.shape.duration() > self.length_days {
                return bad(format!("outbreak {i} runs past the end of the series"));
            }
            if o.onset_day + o.gold_lag_days >= self.length_days {
                return bad(format!("outbreak {i} gold posting falls after the series"));
            }
        }
        Ok(())
    }
}

/// Deterministic sampler over the documented ChaCha8 stream.
pub struct CountSampler {
    rng: ChaCha8Rng,
}

impl CountSampler {
    pub fn new(seed: u64) -> Self {
        CountSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in (0, 1].
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn knuth(&mut self, mean: f64) -> u64 {
        let limit = (-mean).exp();
        let mut k = 0u64;
        let mut p = self.uniform();
        while p > limit {
            k += 1;
            p *= self.uniform();
        }
        k
    }

    pub fn poisson(&mut self, mean: f64) -> u64 {
        let chunks = (mean / POISSON_CHUNK).ceil().max(1.0) as u64;
        let part = mean / chunks as f64;
        (0..chunks).map(|_| self.knuth(part)).sum()
    }
}

/// Poisson noise at the day's weekday/weekend mean plus deterministic
/// outbreak shapes; one gold posting per outbreak at onset + lag.
pub fn generate(spec: &ScenarioSpec) -> Result<(CountSeries, GoldStandard)> {
    spec.validate()?;
    let topic = Topic::new(&spec.disease, &spec.country)?;
    let mut sampler = CountSampler::new(spec.seed);
    let mut counts: Vec<u64> = (0..spec.length_days)
        .map(|i| {
            let date = spec.start_date + chrono::Days::new(i as u64);
            let mean = if is_weekend(date.weekday()) {
                spec.weekend_mean
            } else {
                spec.weekday_mean
            };
            match spec.noise {
                NoiseModel::Poisson => sampler.poisson(mean),
            }
        })
        .collect();
    let mut postings = Vec::with_capacity(spec.outbreaks.len());
    for o in &spec.outbreaks {
        for (j, extra) in o.shape.profile().into_iter().enumerate() {
            counts[o.onset_day + j] += extra;
        }
        postings.push(spec.start_date + chrono::Days::new((o.onset_day + o.gold_lag_days) as u64));
    }
    let series = CountSeries::new(topic.clone(), spec.start_date, counts)?;
    Ok((series, GoldStandard::new(topic, postings)))
}

/// Force the counts on `dates` to zero.
pub fn sink_inject(series: &CountSeries, dates: &[NaiveDate]) -> Result<CountSeries> {
    let mut counts = series.counts().to_vec();
    for &d in dates {
        let i = series.index_of(d).ok_or(Error::DateOutOfRange {
            date: d,
            start: series.start_date(),
            end: series.end_date(),
        })?;
        counts[i] = 0;
    }
    CountSeries::new(series.topic().clone(), series.start_date(), counts)
}
