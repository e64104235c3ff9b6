//! Threshold grid search maximising F1 over training datasets.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::detectors::{detect, DetectionResult, DetectorConfig};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, metrics, score, DatasetScore, EvaluationReport};
use crate::scalar::Scalar;
use crate::series::{CountSeries, GoldStandard};

pub const SWEEP_HEADER: [&str; 9] = [
    "threshold",
    "tp",
    "fp",
    "fn",
    "tn",
    "sensitivity",
    "ppv",
    "f1",
    "alarms_per_100_days",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// F1 of the summed tallies.
    #[default]
    Pooled,
    /// Mean of the per-dataset F1 values that are defined.
    PerDatasetMean,
}

#[derive(Debug, Clone)]
pub struct SweepSpec<T> {
    /// Algorithm and every fixed parameter; its threshold is ignored.
    pub template: DetectorConfig<T>,
    pub threshold_grid: Vec<T>,
    pub training: Vec<(CountSeries, GoldStandard)>,
    pub objective: Objective,
    /// Optional extra grid dimensions. Empty means "use the template value".
    pub k_grid: Vec<T>,
    pub lambda_grid: Vec<T>,
    pub sigma_floor_grid: Vec<T>,
    pub purge_grid: Vec<u64>,
}

impl<T: Scalar> SweepSpec<T> {
    pub fn new(
        template: DetectorConfig<T>,
        threshold_grid: Vec<T>,
        training: Vec<(CountSeries, GoldStandard)>,
    ) -> Self {
        SweepSpec {
            template,
            threshold_grid,
            training,
            objective: Objective::Pooled,
            k_grid: Vec::new(),
            lambda_grid: Vec::new(),
            sigma_floor_grid: Vec::new(),
            purge_grid: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.threshold_grid.is_empty() {
            return Err(Error::InvalidSweep("threshold grid is empty".into()));
        }
        if self.threshold_grid.iter().any(|t| t.is_nan())
            || self.threshold_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidSweep(
                "threshold grid must be strictly increasing".into(),
            ));
        }
        if self.training.is_empty() {
            return Err(Error::InvalidSweep("no training datasets".into()));
        }
        Ok(())
    }

    /// Every non-threshold parameter combination, in grid order.
    fn parameter_sets(&self) -> Vec<DetectorConfig<T>> {
        let or_template = |g: &Vec<T>, v: T| if g.is_empty() { vec![v] } else { g.clone() };
        let ks = or_template(&self.k_grid, self.template.k);
        let lambdas = or_template(&self.lambda_grid, self.template.lambda);
        let floors = or_template(&self.sigma_floor_grid, self.template.sigma_floor);
        let purges = if self.purge_grid.is_empty() {
            vec![self.template.purge_cutoff]
        } else {
            self.purge_grid.clone()
        };
        let mut out = Vec::new();
        for &k in &ks {
            for &lambda in &lambdas {
                for &sigma_floor in &floors {
                    for &purge_cutoff in &purges {
                        out.push(DetectorConfig {
                            k,
                            lambda,
                            sigma_floor,
                            purge_cutoff,
                            ..self.template.clone()
                        });
                    }
                }
            }
        }
        out
    }

    fn is_multi_dimensional(&self) -> bool {
        [&self.k_grid, &self.lambda_grid, &self.sigma_floor_grid]
            .iter()
            .any(|g| g.len() > 1)
            || self.purge_grid.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub config: DetectorConfig<T>,
    pub report: EvaluationReport<T>,
    /// Value of the sweep objective, `None` when F1 is undefined.
    pub objective: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome<T> {
    pub best_threshold: T,
    pub best_config: DetectorConfig<T>,
    pub best_objective: T,
    pub table: Vec<SweepRow<T>>,
    #[serde(skip)]
    multi_dimensional: bool,
}

impl<T: Scalar> SweepOutcome<T> {
    pub fn best_row(&self) -> &SweepRow<T> {
        self.table
            .iter()
            .find(|r| r.config == self.best_config)
            .expect("best row is in the table")
    }
}

fn objective_value<T: Scalar>(
    objective: Objective,
    pooled: &EvaluationReport<T>,
    scores: &[DatasetScore],
) -> Result<Option<T>> {
    match objective {
        Objective::Pooled => Ok(pooled.f1.map(|m| m.value)),
        Objective::PerDatasetMean => {
            let mut sum = T::zero();
            let mut n = 0usize;
            for s in scores {
                if let Some(f1) = metrics::<T>(s.tally, s.days_observed, s.alert_days)?.f1 {
                    sum = sum + f1.value;
                    n += 1;
                }
            }
            Ok((n > 0).then(|| sum / T::from_usize_lossy(n)))
        }
    }
}

/// Evaluate every grid point and return the one with the highest F1. Ties go
/// to the larger threshold (fewer alarms), then to the earlier grid point.
pub fn sweep<T: Scalar>(spec: &SweepSpec<T>) -> Result<SweepOutcome<T>> {
    spec.validate()?;
    let mut table = Vec::new();
    let mut best: Option<(T, T, DetectorConfig<T>)> = None;

    for params in spec.parameter_sets() {
        // Statistics do not depend on the threshold; detect once per dataset.
        let detections: Vec<DetectionResult<T>> = spec
            .training
            .iter()
            .map(|(series, _)| detect(series, &params))
            .collect::<Result<_>>()?;

        for &threshold in &spec.threshold_grid {
            let scores: Vec<DatasetScore> = detections
                .iter()
                .zip(&spec.training)
                .map(|(d, (_, gold))| score(&d.rethreshold(threshold), gold))
                .collect::<Result<_>>()?;
            let report = aggregate::<T>(&scores)?;
            let objective = objective_value(spec.objective, &report, &scores)?;
            let config = params.clone().with_threshold(threshold);
            if let Some(obj) = objective {
                let better = match &best {
                    None => true,
                    Some((b_obj, b_thr, _)) => {
                        obj > *b_obj || (obj == *b_obj && threshold > *b_thr)
                    }
                };
                if better {
                    best = Some((obj, threshold, config.clone()));
                }
            }
            table.push(SweepRow {
                config,
                report,
                objective,
            });
        }
    }

    let (best_objective, best_threshold, best_config) =
        best.ok_or(Error::NoInformativeThreshold)?;
    Ok(SweepOutcome {
        best_threshold,
        best_config,
        best_objective,
        table,
        multi_dimensional: spec.is_multi_dimensional(),
    })
}

fn cell<T: Scalar>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write the sweep table as CSV. Multi-dimensional sweeps get trailing
/// `k,lambda,sigma_floor,purge_cutoff` columns.
pub fn write_sweep_table<T: Scalar, W: Write>(outcome: &SweepOutcome<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if outcome.multi_dimensional {
        header.extend(["k", "lambda", "sigma_floor", "purge_cutoff"]);
    }
    w.write_record(&header)?;
    for row in &outcome.table {
        let r = &row.report;
        let mut rec = vec![
            row.config.threshold.to_string(),
            r.tally.tp.to_string(),
            r.tally.fp.to_string(),
            r.tally.fn_.to_string(),
            r.tally.tn.to_string(),
            cell(r.sensitivity.map(|m| m.value)),
            cell(r.ppv.map(|m| m.value)),
            cell(r.f1.map(|m| m.value)),
            r.alarms_per_100_days.to_string(),
        ];
        if outcome.multi_dimensional {
            rec.extend([
                row.config.k.to_string(),
                row.config.lambda.to_string(),
                row.config.sigma_floor.to_string(),
                row.config.purge_cutoff.to_string(),
            ]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
