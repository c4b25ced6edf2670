//! Experiment presets and batch simulation of all four conditions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{bmld, masking_release, HumanReference, HUMAN_EXP2, HUMAN_EXP3};
use crate::error::{Error, Result};
use crate::model::PathwayConfig;
use crate::psychophysics::{run_condition, simulated_observer, ThresholdResult, RUNS_PER_THRESHOLD};
use crate::rng::derive_seed;
use crate::stimulus::{ConditionSpec, TrialOptions};

pub const F0: f64 = 40.0;
pub const MISTUNING: f64 = 2.64;
pub const THRESHOLD_SAMPLES: usize = 20;

const SAMPLE_STREAM: u64 = 0x5a3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Exp2,
    Exp3,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 2] = [ExperimentId::Exp2, ExperimentId::Exp3];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
        }
    }

    pub fn n_components(self) -> usize {
        match self {
            ExperimentId::Exp2 => 8,
            ExperimentId::Exp3 => 32,
        }
    }

    pub fn human(self) -> HumanReference {
        match self {
            ExperimentId::Exp2 => HUMAN_EXP2,
            ExperimentId::Exp3 => HUMAN_EXP3,
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.as_str() == s || &e.as_str()[3..] == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment '{s}' (expected exp2 or exp3)")))
    }
}

/// Interaural configuration and tuning of one condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConditionKey {
    pub dichotic: bool,
    pub mistuned: bool,
}

impl ConditionKey {
    pub const ALL: [ConditionKey; 4] = [
        ConditionKey { dichotic: false, mistuned: false },
        ConditionKey { dichotic: false, mistuned: true },
        ConditionKey { dichotic: true, mistuned: false },
        ConditionKey { dichotic: true, mistuned: true },
    ];

    pub fn label(self) -> &'static str {
        match (self.dichotic, self.mistuned) {
            (false, false) => "diotic-harmonic",
            (false, true) => "diotic-mistuned",
            (true, false) => "dichotic-harmonic",
            (true, true) => "dichotic-mistuned",
        }
    }

    fn index(self) -> usize {
        (self.dichotic as usize) * 2 + self.mistuned as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub id: ExperimentId,
    /// Indexed like [`ConditionKey::ALL`].
    pub conditions: [ConditionSpec; 4],
}

impl ExperimentPreset {
    pub fn new(id: ExperimentId) -> Self {
        let n = id.n_components();
        let conditions = ConditionKey::ALL
            .map(|k| ConditionSpec::new(F0, if k.mistuned { MISTUNING } else { 0.0 }, n, k.dichotic));
        Self { id, conditions }
    }

    pub fn condition(&self, key: ConditionKey) -> &ConditionSpec {
        &self.conditions[key.index()]
    }

    /// SHA-256 of the preset's JSON form, hex encoded.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("preset serializes").as_bytes())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub threshold_samples: usize,
    pub runs_per_sample: usize,
    pub trial_options: TrialOptions,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            threshold_samples: THRESHOLD_SAMPLES,
            runs_per_sample: RUNS_PER_THRESHOLD,
            trial_options: TrialOptions::default(),
        }
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub key: ConditionKey,
    /// One entry per threshold sample, each the mean of several tracks.
    pub samples: Vec<ThresholdResult>,
    /// Pooled result whose runs are the sample means.
    pub pooled: ThresholdResult,
    pub threshold: Stat,
}

impl ConditionResult {
    pub fn sample_means(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.mean_threshold).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: ExperimentId,
    pub pathway: PathwayConfig,
    pub seed: u64,
    pub settings: ExperimentSettings,
    pub conditions: Vec<ConditionResult>,
}

impl ExperimentResult {
    pub fn condition(&self, key: ConditionKey) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.key == key)
    }

    fn paired(&self, a: ConditionKey, b: ConditionKey, f: fn(&ThresholdResult, &ThresholdResult) -> Result<f64>) -> Option<Stat> {
        let (a, b) = (self.condition(a)?, self.condition(b)?);
        f(&a.pooled, &b.pooled).ok()?;
        let diffs: Vec<f64> = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| f(x, y).expect("conditions checked above"))
            .collect();
        Some(Stat::of(&diffs))
    }

    /// Masking release by mistuning, harmonic minus mistuned, per sample.
    pub fn release(&self, dichotic: bool) -> Option<Stat> {
        self.paired(
            ConditionKey { dichotic, mistuned: true },
            ConditionKey { dichotic, mistuned: false },
            masking_release,
        )
    }

    /// Diotic minus dichotic threshold, per sample.
    pub fn bmld(&self, mistuned: bool) -> Option<Stat> {
        self.paired(
            ConditionKey { dichotic: false, mistuned },
            ConditionKey { dichotic: true, mistuned },
            bmld,
        )
    }
}

/// Simulates the selected conditions of a preset. Diotic conditions use the
/// monaural pathway, dichotic ones the binaural pathway of `pathway.order`.
pub fn run_conditions(
    preset: &ExperimentPreset,
    keys: &[ConditionKey],
    pathway: PathwayConfig,
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<ExperimentResult> {
    pathway.validate()?;
    if settings.threshold_samples == 0 || settings.runs_per_sample == 0 {
        return Err(Error::InvalidParameter("need at least one sample and one run per sample".into()));
    }
    let jobs: Vec<(ConditionKey, usize)> = keys
        .iter()
        .flat_map(|&k| (0..settings.threshold_samples).map(move |s| (k, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(key, sample)| {
            let spec = preset.condition(key);
            let observer = simulated_observer(spec, pathway)?;
            let sample_seed = derive_seed(seed, &[SAMPLE_STREAM, key.index() as u64, sample as u64]);
            run_condition(spec, &observer, Some(pathway), settings.runs_per_sample, settings.trial_options, sample_seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut results = results.into_iter();
    let conditions = keys
        .iter()
        .map(|&key| {
            let samples: Vec<ThresholdResult> = results.by_ref().take(settings.threshold_samples).collect();
            let means: Vec<f64> = samples.iter().map(|s| s.mean_threshold).collect();
            ConditionResult {
                key,
                threshold: Stat::of(&means),
                pooled: ThresholdResult::from_runs(preset.condition(key).clone(), Some(pathway), means),
                samples,
            }
        })
        .collect();
    Ok(ExperimentResult { experiment: preset.id, pathway, seed, settings: *settings, conditions })
}

/// All four conditions of a preset.
pub fn run_experiment(
    preset: &ExperimentPreset,
    pathway: PathwayConfig,
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<ExperimentResult> {
    run_conditions(preset, &ConditionKey::ALL, pathway, settings, seed)
}

/// All four conditions for several processing orders. Diotic conditions only
/// involve the monaural pathway, so orders sharing its parameters share one
/// diotic simulation; the output equals separate [`run_experiment`] calls.
pub fn run_orders(
    preset: &ExperimentPreset,
    pathways: &[PathwayConfig],
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<Vec<ExperimentResult>> {
    let diotic_keys: Vec<ConditionKey> = ConditionKey::ALL.into_iter().filter(|k| !k.dichotic).collect();
    let dichotic_keys: Vec<ConditionKey> = ConditionKey::ALL.into_iter().filter(|k| k.dichotic).collect();
    let monaural_part = |p: &PathwayConfig| (p.sigma_m, p.mod_freq_harmonic, p.mod_freq_mistuned);
    let mut shared: Vec<ExperimentResult> = Vec::new();
    let mut out = Vec::with_capacity(pathways.len());
    for &pathway in pathways {
        let diotic = match shared.iter().find(|r| monaural_part(&r.pathway) == monaural_part(&pathway)) {
            Some(r) => r.clone(),
            None => {
                let r = run_conditions(preset, &diotic_keys, pathway, settings, seed)?;
                shared.push(r.clone());
                r
            }
        };
        let dichotic = run_conditions(preset, &dichotic_keys, pathway, settings, seed)?;
        let relabel = |mut c: ConditionResult| {
            c.pooled.pathway = Some(pathway);
            c.samples.iter_mut().for_each(|s| s.pathway = Some(pathway));
            c
        };
        let mut conditions: Vec<ConditionResult> =
            diotic.conditions.into_iter().map(relabel).chain(dichotic.conditions).collect();
        conditions.sort_by_key(|c| c.key.index());
        out.push(ExperimentResult { experiment: preset.id, pathway, seed, settings: *settings, conditions });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProcessingOrder;

    #[test]
    fn presets() {
        for id in ExperimentId::ALL {
            let p = ExperimentPreset::new(id);
            for (k, c) in ConditionKey::ALL.iter().zip(&p.conditions) {
                assert_eq!(c.f0, 40.0);
                assert_eq!(c.n_components, id.n_components());
                assert_eq!(c.is_dichotic(), k.dichotic);
                assert_eq!(c.is_mistuned(), k.mistuned);
                assert_eq!(c.masker_level, 65.0);
                assert_eq!(c.target_freq, 800.0);
                assert_eq!(p.condition(*k), c);
            }
        }
        assert_eq!(ExperimentPreset::new(ExperimentId::Exp2).conditions[1].mistuning, 2.64);
        assert_ne!(
            ExperimentPreset::new(ExperimentId::Exp2).digest(),
            ExperimentPreset::new(ExperimentId::Exp3).digest()
        );
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("exp1".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn stats() {
        let s = Stat::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Stat::of(&[4.0]).std, 0.0);
    }

    #[test]
    fn shared_diotic_matches_separate_runs() {
        let preset = ExperimentPreset::new(ExperimentId::Exp2);
        let settings = ExperimentSettings { threshold_samples: 2, runs_per_sample: 1, ..Default::default() };
        let pathways = [
            PathwayConfig::new(ProcessingOrder::BinauralThenMod, 0.01, 0.02),
            PathwayConfig::new(ProcessingOrder::NoModInBinaural, 0.01, 0.03),
        ];
        let shared = run_orders(&preset, &pathways, &settings, 5).unwrap();
        for (p, r) in pathways.iter().zip(&shared) {
            assert_eq!(r, &run_experiment(&preset, *p, &settings, 5).unwrap());
        }
    }
}
