//! Merge of `--config` file values and command-line flags (flags win).

use std::path::Path;

use aberrant::detectors::{Algorithm, DetectorConfig, W2Strata};

use crate::args::{AlgorithmArg, DetectorFlags, FileConfig, Format, StrataArg};
use crate::error::CliError;
use crate::input::read_text;

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = read_text(path).map_err(|e| CliError::Usage(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub struct Settings {
    pub algorithm: Option<AlgorithmArg>,
    pub format: Format,
    threshold: Option<f64>,
    baseline: Option<usize>,
    guard: Option<usize>,
    k: Option<f64>,
    lambda: Option<f64>,
    sigma_floor: Option<f64>,
    purge: Option<u64>,
    fstat_test_len: Option<usize>,
    w2_strata: Option<StrataArg>,
}

impl Settings {
    pub fn resolve(flags: &DetectorFlags, file: &FileConfig) -> Self {
        Settings {
            algorithm: flags.algorithm.or(file.algorithm),
            format: flags.format.or(file.format).unwrap_or_default(),
            threshold: flags.threshold.or(file.threshold),
            baseline: flags.baseline.or(file.baseline),
            guard: flags.guard.or(file.guard),
            k: flags.k.or(file.k),
            lambda: flags.lambda.or(file.lambda),
            sigma_floor: flags.sigma_floor.or(file.sigma_floor),
            purge: flags.purge.or(file.purge),
            fstat_test_len: flags.fstat_test_len.or(file.fstat_test_len),
            w2_strata: flags.w2_strata.or(file.w2_strata),
        }
    }

    /// Selected algorithms; C2 when none was given.
    pub fn algorithms(&self) -> Vec<Algorithm> {
        match self.algorithm {
            None | Some(AlgorithmArg::C2) => vec![Algorithm::C2],
            Some(AlgorithmArg::C3) => vec![Algorithm::C3],
            Some(AlgorithmArg::W2) => vec![Algorithm::W2],
            Some(AlgorithmArg::Fstat) => vec![Algorithm::Fstat],
            Some(AlgorithmArg::Ewma) => vec![Algorithm::Ewma],
            Some(AlgorithmArg::All) => Algorithm::ALL.to_vec(),
        }
    }

    pub fn single_algorithm(&self, command: &str) -> Result<Algorithm, CliError> {
        match self.algorithms().as_slice() {
            [a] => Ok(*a),
            _ => Err(CliError::Usage(format!(
                "`{command}` takes a single algorithm, not `all`"
            ))),
        }
    }

    pub fn config(&self, algorithm: Algorithm) -> Result<DetectorConfig<f64>, CliError> {
        let mut cfg = DetectorConfig::new(algorithm);
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.baseline {
            cfg.baseline_len = v;
        }
        if let Some(v) = self.guard {
            cfg.guard = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.sigma_floor {
            cfg.sigma_floor = v;
        }
        if let Some(v) = self.purge {
            cfg.purge_cutoff = v;
        }
        if let Some(v) = self.fstat_test_len {
            cfg.fstat_test_len = v;
        }
        if let Some(v) = self.w2_strata {
            cfg.w2_strata = match v {
                StrataArg::WeekdayBaseline => W2Strata::WeekdayBaseline,
                StrataArg::PerStratum => W2Strata::PerStratum,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
