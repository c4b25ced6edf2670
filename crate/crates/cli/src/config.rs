//! Run configuration: an optional TOML file merged with command-line flags.
//! Flags win over the file, the file wins over `BINHARM_OUT_DIR`, and built-in
//! defaults fill the rest. The resolved value is written into every output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use binharm::calibration::{Anchors, FitOptions};
use binharm::experiment::{ExperimentId, ExperimentSettings, THRESHOLD_SAMPLES};
use binharm::model::ProcessingOrder;
use binharm::psychophysics::RUNS_PER_THRESHOLD;
use binharm::stimulus::TrialOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "BINHARM_OUT_DIR";
pub const CALIBRATION_FILE: &str = "calibration.json";

/// A noise value given directly, or taken from a previous calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma {
    Fit,
    Value(f64),
}

impl FromStr for Sigma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "fit" {
            return Ok(Sigma::Fit);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(Sigma::Value(v)),
            _ => Err(format!("expected 'fit' or a non-negative number, got '{s}'")),
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Fit => f.write_str("fit"),
            Sigma::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Sigma::Fit => s.serialize_str("fit"),
            Sigma::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Sigma::from_str(&v.to_string()),
            Raw::Word(w) => Sigma::from_str(&w),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Comma-separated list with `all` as a shorthand.
pub fn parse_list<T: FromStr + Copy>(s: &str, all: &[T]) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    if s == "all" {
        return Ok(all.to_vec());
    }
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|e| e.to_string())).collect()
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub experiments: Option<Vec<String>>,
    pub orders: Option<Vec<String>>,
    pub sigma_m: Option<Sigma>,
    pub sigma_b: Option<Sigma>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub background_noise: Option<bool>,
    pub dump_internals: Option<bool>,
    pub threshold_samples: Option<usize>,
    pub runs_per_sample: Option<usize>,
    pub diotic_harmonic_rel: Option<f64>,
    pub harmonic_bmld: Option<f64>,
    pub fit_runs: Option<usize>,
    pub fit_tolerance: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn experiments(&self) -> Result<Option<Vec<ExperimentId>>, CliError> {
        self.experiments.as_ref().map(|v| parse_each(v)).transpose()
    }

    pub fn orders(&self) -> Result<Option<Vec<ProcessingOrder>>, CliError> {
        self.orders.as_ref().map(|v| parse_each(v)).transpose()
    }
}

fn parse_each<T: FromStr>(items: &[String]) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    items.iter().map(|s| s.parse::<T>().map_err(|e| CliError::Validation(e.to_string()))).collect()
}

/// Output directory: flag, then config file, then environment, then `.`.
pub fn resolve_out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Fully resolved configuration of a `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiments: Vec<ExperimentId>,
    pub orders: Vec<ProcessingOrder>,
    pub sigma_m: Sigma,
    pub sigma_b: Sigma,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub calibration: PathBuf,
    pub background_noise: bool,
    pub dump_internals: bool,
    pub threshold_samples: usize,
    pub runs_per_sample: usize,
}

impl RunConfig {
    pub fn settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            threshold_samples: self.threshold_samples,
            runs_per_sample: self.runs_per_sample,
            trial_options: TrialOptions { background_noise: self.background_noise },
        }
    }

    pub fn needs_calibration(&self) -> bool {
        self.sigma_m == Sigma::Fit || self.sigma_b == Sigma::Fit
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.experiments.is_empty() || self.orders.is_empty() {
            return Err(CliError::Validation("at least one experiment and one order are required".into()));
        }
        if self.threshold_samples < 2 || self.runs_per_sample == 0 {
            return Err(CliError::Validation(
                "threshold samples must be >= 2 and runs per sample >= 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn default_experiments() -> Vec<ExperimentId> {
    vec![ExperimentId::Exp2]
}

pub fn default_orders() -> Vec<ProcessingOrder> {
    vec![ProcessingOrder::BinauralThenMod]
}

pub const DEFAULT_SAMPLES: usize = THRESHOLD_SAMPLES;
pub const DEFAULT_RUNS: usize = RUNS_PER_THRESHOLD;

/// Fully resolved configuration of a `calibrate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub anchors: Anchors,
    pub orders: Vec<ProcessingOrder>,
    pub fit: FitOptions,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub output: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_parses_numbers_and_fit() {
        assert_eq!("fit".parse::<Sigma>().unwrap(), Sigma::Fit);
        assert_eq!("0.25".parse::<Sigma>().unwrap(), Sigma::Value(0.25));
        assert!("-1".parse::<Sigma>().is_err());
        assert!("abc".parse::<Sigma>().is_err());
    }

    #[test]
    fn file_config_accepts_both_sigma_forms() {
        let cfg: FileConfig = toml::from_str(
            "experiments = [\"exp3\"]\norders = [\"no-mod-in-binaural\"]\nsigma_m = 0.5\nsigma_b = \"fit\"\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.sigma_m, Some(Sigma::Value(0.5)));
        assert_eq!(cfg.sigma_b, Some(Sigma::Fit));
        assert_eq!(cfg.experiments().unwrap(), Some(vec![ExperimentId::Exp3]));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn lists_expand_all() {
        assert_eq!(parse_list("all", &ProcessingOrder::ALL).unwrap().len(), 3);
        assert_eq!(parse_list("2,exp3", &ExperimentId::ALL).unwrap(), ExperimentId::ALL.to_vec());
        assert!(parse_list::<ExperimentId>("4", &ExperimentId::ALL).is_err());
    }

    #[test]
    fn sigma_round_trips_through_json() {
        let json = serde_json::to_string(&[Sigma::Fit, Sigma::Value(0.125)]).unwrap();
        assert_eq!(json, "[\"fit\",0.125]");
        assert_eq!(serde_json::from_str::<Vec<Sigma>>(&json).unwrap(), vec![Sigma::Fit, Sigma::Value(0.125)]);
    }
}
