//! Result files. A simulation writes a long-format CSV whose first line embeds
//! the resolved configuration, so the file can be regenerated byte for byte,
//! plus a JSON summary with provenance digests.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calibration::HumanReference;
use crate::error::{Error, Result};
use crate::experiment::{
    run_experiment, sha256_hex, ConditionKey, ExperimentId, ExperimentPreset, ExperimentResult, ExperimentSettings,
    Stat,
};
use crate::model::PathwayConfig;
use crate::stimulus::MASKER_LEVEL;

const CONFIG_PREFIX: &str = "# config: ";
pub const CSV_HEADER: &str = "experiment,config,ipd,mistuning,sample,threshold_db";

/// Everything a simulation run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub experiment: ExperimentId,
    pub pathway: PathwayConfig,
    pub seed: u64,
    pub settings: ExperimentSettings,
}

impl SimulationConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn run(&self) -> Result<ExperimentResult> {
        run_experiment(&ExperimentPreset::new(self.experiment), self.pathway, &self.settings, self.seed)
    }
}

fn config_of(result: &ExperimentResult) -> SimulationConfig {
    SimulationConfig {
        experiment: result.experiment,
        pathway: result.pathway,
        seed: result.seed,
        settings: result.settings,
    }
}

/// Long-format CSV: one row per condition and threshold sample.
pub fn results_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    writeln!(out, "{CONFIG_PREFIX}{}", config_of(result).to_json()).unwrap();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for c in &result.conditions {
        let spec = &c.pooled.condition;
        let ipd = if c.key.dichotic { 180 } else { 0 };
        for (i, s) in c.samples.iter().enumerate() {
            writeln!(
                out,
                "{},{},{ipd},{},{},{}",
                result.experiment,
                result.pathway.order,
                spec.mistuning,
                i + 1,
                s.mean_threshold
            )
            .unwrap();
        }
    }
    out
}

/// Configuration embedded in the first line of a results CSV.
pub fn embedded_config(csv: &str) -> Result<SimulationConfig> {
    let first = csv.lines().next().unwrap_or_default();
    let json = first
        .strip_prefix(CONFIG_PREFIX)
        .ok_or_else(|| Error::MalformedResults("first line does not carry a config".into()))?;
    Ok(serde_json::from_str(json)?)
}

/// Re-runs the simulation described by a results CSV and renders it again.
pub fn regenerate_csv(csv: &str) -> Result<String> {
    Ok(results_csv(&embedded_config(csv)?.run()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub dichotic: bool,
    pub mistuning: f64,
    pub n_samples: usize,
    pub threshold: Stat,
    pub relative_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsSummary {
    pub experiment: ExperimentId,
    pub order: crate::model::ProcessingOrder,
    pub seed: u64,
    pub sigma_m: f64,
    pub sigma_b: f64,
    pub config: SimulationConfig,
    pub config_digest: String,
    pub preset_digest: String,
    pub conditions: Vec<ConditionSummary>,
    pub release_diotic: Option<Stat>,
    pub release_dichotic: Option<Stat>,
    pub bmld_harmonic: Option<Stat>,
    pub bmld_mistuned: Option<Stat>,
    pub human: HumanReference,
    /// Front-end settings the run was launched with, kept for provenance.
    #[serde(default)]
    pub run_config: Option<serde_json::Value>,
}

pub fn summarize(result: &ExperimentResult, run_config: Option<serde_json::Value>) -> ResultsSummary {
    let config = config_of(result);
    ResultsSummary {
        experiment: result.experiment,
        order: result.pathway.order,
        seed: result.seed,
        sigma_m: result.pathway.sigma_m,
        sigma_b: result.pathway.sigma_b,
        config_digest: config.digest(),
        preset_digest: ExperimentPreset::new(result.experiment).digest(),
        config,
        conditions: result
            .conditions
            .iter()
            .map(|c| ConditionSummary {
                condition: c.key.label().to_string(),
                dichotic: c.key.dichotic,
                mistuning: c.pooled.condition.mistuning,
                n_samples: c.samples.len(),
                threshold: c.threshold,
                relative_threshold: c.pooled.relative_threshold,
            })
            .collect(),
        release_diotic: result.release(false),
        release_dichotic: result.release(true),
        bmld_harmonic: result.bmld(false),
        bmld_mistuned: result.bmld(true),
        human: result.experiment.human(),
        run_config,
    }
}

pub fn summary_json(result: &ExperimentResult, run_config: Option<serde_json::Value>) -> String {
    let mut s = serde_json::to_string_pretty(&summarize(result, run_config)).expect("summary serializes");
    s.push('\n');
    s
}

/// Re-runs the simulation recorded in a JSON summary and renders it again.
pub fn regenerate_summary(json: &str) -> Result<String> {
    let old: ResultsSummary = serde_json::from_str(json)?;
    Ok(summary_json(&old.config.run()?, old.run_config))
}

pub const REPORT_HEADER: &str = "experiment,config,quantity,model_mean,model_std,human";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Plot data: condition thresholds, masking releases and BMLDs per experiment
/// and configuration, with the human group means alongside. Thresholds are
/// relative to the masker level.
pub fn report_csv(summaries: &[ResultsSummary]) -> String {
    let mut rows: Vec<&ResultsSummary> = summaries.iter().collect();
    rows.sort_by_key(|s| (s.experiment.as_str(), s.order.as_str()));
    let mut out = String::new();
    writeln!(out, "{REPORT_HEADER}").unwrap();
    for s in rows {
        for c in &s.conditions {
            let rel = Stat { mean: c.threshold.mean - MASKER_LEVEL, std: c.threshold.std };
            let human = (c.condition == "diotic-harmonic").then_some(s.human.diotic_harmonic_rel).flatten();
            writeln!(out, "{},{},{},{},{},{}", s.experiment, s.order, c.condition, rel.mean, rel.std, opt(human)).unwrap();
        }
        let quantities = [
            ("release_diotic", s.release_diotic, Some(s.human.release_diotic)),
            ("release_dichotic", s.release_dichotic, s.human.release_dichotic),
            ("bmld_harmonic", s.bmld_harmonic, Some(s.human.bmld_harmonic)),
            ("bmld_mistuned", s.bmld_mistuned, Some(s.human.bmld_mistuned)),
        ];
        for (name, model, human) in quantities {
            let Some(m) = model else { continue };
            writeln!(out, "{},{},{name},{},{},{}", s.experiment, s.order, m.mean, m.std, opt(human)).unwrap();
        }
    }
    out
}

/// Threshold samples of one condition read back from a results CSV.
pub fn parse_results_csv(csv: &str) -> Result<Vec<(ConditionKey, Vec<f64>)>> {
    let mut lines = csv.lines();
    lines.next();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::MalformedResults("missing header".into()));
    }
    let mut out: Vec<(ConditionKey, Vec<f64>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::MalformedResults(format!("row {}: '{line}'", i + 1));
        if fields.len() != 6 {
            return Err(bad());
        }
        let dichotic = match fields[2] {
            "0" => false,
            "180" => true,
            _ => return Err(bad()),
        };
        let mistuning: f64 = fields[3].parse().map_err(|_| bad())?;
        let threshold: f64 = fields[5].parse().map_err(|_| bad())?;
        let key = ConditionKey { dichotic, mistuned: mistuning != 0.0 };
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(threshold),
            None => out.push((key, vec![threshold])),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProcessingOrder;

    #[test]
    fn config_line_round_trips() {
        let cfg = SimulationConfig {
            experiment: ExperimentId::Exp3,
            pathway: PathwayConfig::new(ProcessingOrder::NoModInBinaural, 0.5, 0.25),
            seed: 99,
            settings: ExperimentSettings::default(),
        };
        let csv = format!("{CONFIG_PREFIX}{}\n{CSV_HEADER}\n", cfg.to_json());
        assert_eq!(embedded_config(&csv).unwrap(), cfg);
        assert!(matches!(embedded_config("nope\n"), Err(Error::MalformedResults(_))));
    }

    #[test]
    fn malformed_rows() {
        let csv = format!("# config: {{}}\n{CSV_HEADER}\nexp2,x,90,0,1,50\n");
        assert!(parse_results_csv(&csv).is_err());
    }
}
