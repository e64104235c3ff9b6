//! Straight-line reference implementations used as test oracles. Nothing here
//! calls into the detector internals; statistics are recomputed per day from
//! the raw counts with two-pass floating-point moments.

#![allow(dead_code)]

use aberrant::detectors::{Algorithm, DetectorConfig, W2Strata};
use aberrant::{CountSeries, Topic};
use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn topic() -> Topic {
    Topic::new("yellow fever", "senegal").unwrap()
}

pub fn monday() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).unwrap()
}

/// Random count series mixing quiet days, small counts and bursts.
pub fn random_series(seed: u64, len: usize) -> CountSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = monday() + Days::new(rng.gen_range(0..7));
    let counts = (0..len)
        .map(|_| match rng.gen_range(0..10) {
            0..=4 => 0,
            5..=7 => rng.gen_range(1..5),
            8 => rng.gen_range(3..10),
            _ => rng.gen_range(5..30),
        })
        .collect();
    CountSeries::new(topic(), start, counts).unwrap()
}

fn weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

fn mean_sd(values: &[f64], floor: f64) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt().max(floor))
}

pub struct Oracle<'a> {
    counts: Vec<f64>,
    start: NaiveDate,
    cfg: &'a DetectorConfig<f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(series: &CountSeries, cfg: &'a DetectorConfig<f64>) -> Self {
        let counts = series
            .counts()
            .iter()
            .map(|&c| if c <= cfg.purge_cutoff { 0.0 } else { c as f64 })
            .collect();
        Oracle {
            counts,
            start: series.start_date(),
            cfg,
        }
    }

    fn date(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    fn calendar_window(&self, t: usize) -> Option<Vec<f64>> {
        let b = self.cfg.baseline_len;
        let g = self.cfg.guard;
        if t < g + b {
            return None;
        }
        let mut w = Vec::new();
        for i in (t - g - b)..(t - g) {
            w.push(self.counts[i]);
        }
        Some(w)
    }

    fn w2_window(&self, t: usize) -> Option<Vec<f64>> {
        if t < self.cfg.guard {
            return None;
        }
        let want_weekend = self.cfg.w2_strata == W2Strata::PerStratum && weekend(self.date(t));
        let mut w = Vec::new();
        let mut i = t - self.cfg.guard;
        while w.len() < self.cfg.baseline_len && i > 0 {
            i -= 1;
            if weekend(self.date(i)) == want_weekend {
                w.push(self.counts[i]);
            }
        }
        (w.len() == self.cfg.baseline_len).then_some(w)
    }

    fn c2_from(&self, t: usize, window: Option<Vec<f64>>) -> Option<(f64, f64, f64)> {
        let (mu, sd) = mean_sd(&window?, self.cfg.sigma_floor);
        let s = ((self.counts[t] - (mu + self.cfg.k * sd)) / sd).max(0.0);
        Some((s, mu, sd))
    }

    pub fn c2(&self, t: usize) -> Option<f64> {
        self.c2_from(t, self.calendar_window(t)).map(|x| x.0)
    }

    pub fn w2(&self, t: usize) -> Option<f64> {
        self.c2_from(t, self.w2_window(t)).map(|x| x.0)
    }

    pub fn c3(&self, t: usize) -> Option<f64> {
        let mut total = self.c2(t)?;
        for back in 1..=2 {
            if back > t {
                break;
            }
            if let Some((s, mu, sd)) = self.c2_from(t - back, self.calendar_window(t - back)) {
                if self.counts[t - back] <= mu + 3.0 * sd {
                    total += s;
                }
            }
        }
        Some(total)
    }

    pub fn fstat(&self, t: usize) -> Option<f64> {
        let base = self.calendar_window(t)?;
        let nt = self.cfg.fstat_test_len;
        if t + 1 < nt {
            return None;
        }
        let nb = base.len() as f64;
        let mu = base.iter().sum::<f64>() / nb;
        let var_b = base.iter().map(|c| (c - mu).powi(2)).sum::<f64>() / nb;
        let var_b = var_b.max(self.cfg.sigma_floor * self.cfg.sigma_floor);
        let test = &self.counts[t + 1 - nt..=t];
        let var_t = test.iter().map(|c| (c - mu).powi(2)).sum::<f64>() / nt as f64;
        Some(var_t / var_b)
    }

    /// Closed-form geometric sum for the smoothed value at day `t` (0-based).
    pub fn ewma_closed_form(&self, t: usize) -> f64 {
        ewma_closed_form(&self.counts, self.cfg.lambda, t)
    }

    pub fn ewma(&self, t: usize) -> Option<f64> {
        let (mu, sd) = mean_sd(&self.calendar_window(t)?, self.cfg.sigma_floor);
        let l = self.cfg.lambda;
        Some((self.ewma_closed_form(t) - mu) / (sd * (l / (2.0 - l)).sqrt()))
    }

    pub fn statistic(&self, t: usize) -> Option<f64> {
        match self.cfg.algorithm {
            Algorithm::C2 => self.c2(t),
            Algorithm::C3 => self.c3(t),
            Algorithm::W2 => self.w2(t),
            Algorithm::Fstat => self.fstat(t),
            Algorithm::Ewma => self.ewma(t),
        }
    }

    pub fn statistics(&self) -> Vec<Option<f64>> {
        (0..self.counts.len()).map(|t| self.statistic(t)).collect()
    }
}

/// `Y_t = λ Σ_{i=0}^{t-1} (1-λ)^i C_{t-i} + (1-λ)^t C_0`.
pub fn ewma_closed_form(counts: &[f64], lambda: f64, t: usize) -> f64 {
    let keep = 1.0 - lambda;
    let mut y = keep.powi(t as i32) * counts[0];
    for i in 0..t {
        y += lambda * keep.powi(i as i32) * counts[t - i];
    }
    y
}

/// Per-day brute-force labels for the qualifying-window protocol.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct BruteTally {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

pub fn brute_tally(alerts: &[bool], postings: &[usize]) -> BruteTally {
    let mut t = BruteTally::default();
    let covered = |day: usize| postings.iter().any(|&p| day <= p && p - day < 7);
    for &p in postings {
        let hit = (0..alerts.len()).any(|d| alerts[d] && d <= p && p - d < 7);
        if hit {
            t.tp += 1;
        } else {
            t.fn_ += 1;
        }
    }
    for (d, &a) in alerts.iter().enumerate() {
        if covered(d) {
            continue;
        }
        if a {
            t.fp += 1;
        } else {
            t.tn += 1;
        }
    }
    t
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
