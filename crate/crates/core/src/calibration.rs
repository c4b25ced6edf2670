//! Internal-noise calibration and the human reference data.
//!
//! The monaural noise `sigma_m` is fitted once so that the simulated diotic
//! harmonic threshold of experiment 2 meets its anchor; `sigma_b` is fitted per
//! binaural processing order on the dichotic harmonic condition. Every other
//! condition is then predicted without free parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{ConditionKey, ExperimentId, ExperimentPreset};
use crate::model::{Pathway, PathwayConfig, ProcessingOrder};
use crate::psychophysics::{run_seed, run_track, simulated_observer, ThresholdResult, MAX_LEVEL, MIN_LEVEL};
use crate::rng::derive_seed;
use crate::stimulus::{ConditionSpec, TrialOptions, MASKER_LEVEL};

const FIT_STREAM: u64 = 0xf17;

/// Group-mean human results, in dB. Releases are harmonic minus mistuned
/// threshold, BMLDs diotic minus dichotic threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanReference {
    /// Diotic harmonic threshold relative to the masker level, where published.
    pub diotic_harmonic_rel: Option<f64>,
    pub release_diotic: f64,
    pub release_dichotic: Option<f64>,
    pub bmld_harmonic: f64,
    pub bmld_mistuned: f64,
}

/// Experiment 1 (F0 = 160 Hz, resolved); data only, not modelled.
pub const HUMAN_EXP1: HumanReference = HumanReference {
    diotic_harmonic_rel: Some(-12.0),
    release_diotic: 6.3,
    release_dichotic: None,
    bmld_harmonic: 5.5,
    bmld_mistuned: 0.7,
};

/// Experiment 2 (F0 = 40 Hz, 8 components).
pub const HUMAN_EXP2: HumanReference = HumanReference {
    diotic_harmonic_rel: None,
    release_diotic: 5.8,
    release_dichotic: None,
    bmld_harmonic: 8.0,
    bmld_mistuned: 2.0,
};

/// Experiment 3 (F0 = 40 Hz, 32 components).
pub const HUMAN_EXP3: HumanReference = HumanReference {
    diotic_harmonic_rel: None,
    release_diotic: 2.1,
    release_dichotic: Some(0.5),
    bmld_harmonic: 7.0,
    bmld_mistuned: 5.0,
};

/// Internal-noise values reported for the original implementation. Their
/// scale depends on internal signal units, so they are kept for reference
/// only and never used as defaults.
pub mod reported_sigma {
    pub const MONAURAL: f64 = 0.01;
    pub const BINAURAL_THEN_MOD: f64 = 0.04;
    pub const MOD_THEN_BINAURAL: f64 = 0.0076;
    pub const NO_MOD_IN_BINAURAL: f64 = 0.0161;
}

/// Calibration targets for the harmonic conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    /// Diotic harmonic threshold relative to the masker level, dB.
    pub diotic_harmonic_rel: f64,
    /// Harmonic BMLD the dichotic anchor sits below the diotic one, dB.
    pub harmonic_bmld: f64,
}

impl Default for Anchors {
    fn default() -> Self {
        Self { diotic_harmonic_rel: -12.0, harmonic_bmld: 10.0 }
    }
}

impl Anchors {
    pub fn diotic_harmonic(&self) -> f64 {
        MASKER_LEVEL + self.diotic_harmonic_rel
    }

    pub fn dichotic_harmonic(&self) -> f64 {
        self.diotic_harmonic() - self.harmonic_bmld
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diotic_harmonic_rel.is_finite() && self.harmonic_bmld.is_finite()) {
            return Err(Error::InvalidParameter("anchors must be finite".into()));
        }
        Ok(())
    }
}

/// Search settings for [`fit_sigma`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub n_runs: usize,
    pub tolerance: f64,
    pub max_steps: usize,
    pub bracket: (f64, f64),
    pub trial_options: TrialOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_runs: 100,
            tolerance: 0.5,
            max_steps: 20,
            bracket: (1e-6, 1e2),
            trial_options: TrialOptions::default(),
        }
    }
}

/// Mean threshold over a batch of tracks, or the side on which tracks left the
/// level range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "mean", rename_all = "kebab-case")]
pub enum Evaluation {
    Mean(f64),
    AboveRange,
    BelowRange,
}

impl Evaluation {
    /// Signed distance to `target`; tracks that ran off the range count as
    /// infinitely far on their side.
    pub fn offset(&self, target: f64) -> f64 {
        match self {
            Evaluation::Mean(m) => m - target,
            Evaluation::AboveRange => f64::INFINITY,
            Evaluation::BelowRange => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitStep {
    pub sigma: f64,
    pub result: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaFit {
    pub pathway: Pathway,
    pub sigma: f64,
    pub target_threshold: f64,
    pub achieved_threshold: f64,
    pub n_runs_used: usize,
    pub converged: bool,
    /// Noiseless (sigma = 0) evaluation.
    pub floor: Evaluation,
    pub trace: Vec<FitStep>,
}

/// Mean threshold of `n_runs` model tracks with the given configuration.
pub fn evaluate_sigma(
    spec: &ConditionSpec,
    cfg: PathwayConfig,
    n_runs: usize,
    options: TrialOptions,
    seed: u64,
) -> Result<Evaluation> {
    let observer = simulated_observer(spec, cfg)?;
    let runs: Vec<Result<f64>> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut obs = observer.clone();
            run_track(spec, &mut obs, options, run_seed(seed, run)).map(|t| t.threshold)
        })
        .collect();
    let mut sum = 0.0;
    for r in runs {
        match r {
            Ok(t) => sum += t,
            Err(Error::LevelOutOfBounds { level, .. }) if level > MAX_LEVEL => return Ok(Evaluation::AboveRange),
            Err(Error::LevelOutOfBounds { level, .. }) if level < MIN_LEVEL => return Ok(Evaluation::BelowRange),
            Err(e) => return Err(e),
        }
    }
    Ok(Evaluation::Mean(sum / n_runs as f64))
}

fn with_sigma(cfg: PathwayConfig, pathway: Pathway, sigma: f64) -> PathwayConfig {
    match pathway {
        Pathway::Monaural => PathwayConfig { sigma_m: sigma, ..cfg },
        Pathway::Binaural => PathwayConfig { sigma_b: sigma, ..cfg },
    }
}

const BRACKET_EXPANSIONS: usize = 8;
const EXPANSION_FACTOR: f64 = 100.0;

/// Bisection on log sigma until the mean threshold of `n_runs` tracks is
/// within `tolerance` of `target`. All evaluations share one seed, so the
/// objective is a deterministic function of sigma.
pub fn fit_sigma(
    spec: &ConditionSpec,
    cfg: PathwayConfig,
    target: f64,
    options: &FitOptions,
    seed: u64,
) -> Result<SigmaFit> {
    spec.validate()?;
    if options.n_runs == 0 || !(options.tolerance > 0.0) {
        return Err(Error::InvalidParameter("fit needs n_runs > 0 and tolerance > 0".into()));
    }
    let (mut lo, mut hi) = options.bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("bad sigma bracket [{lo}, {hi}]")));
    }
    let pathway = Pathway::for_condition(spec.is_dichotic());
    let eval = |sigma: f64| {
        evaluate_sigma(spec, with_sigma(cfg, pathway, sigma), options.n_runs, options.trial_options, seed)
            .map(|result| FitStep { sigma, result })
    };

    let floor = eval(0.0)?.result;
    let floor_offset = floor.offset(target);
    if floor_offset > options.tolerance {
        return Err(Error::TargetUnreachable {
            target,
            floor: target + floor_offset.min(MAX_LEVEL - target),
        });
    }

    let mut trace = Vec::new();
    let mut best: Option<FitStep> = None;
    let mut keep = |step: FitStep, trace: &mut Vec<FitStep>| {
        let closer = best.map_or(true, |b| step.result.offset(target).abs() < b.result.offset(target).abs());
        if closer {
            best = Some(step);
        }
        trace.push(step);
        step.result.offset(target)
    };

    let mut lo_offset = keep(eval(lo)?, &mut trace);
    for _ in 0..BRACKET_EXPANSIONS {
        if lo_offset <= options.tolerance {
            break;
        }
        lo /= EXPANSION_FACTOR;
        lo_offset = keep(eval(lo)?, &mut trace);
    }
    let mut hi_offset = keep(eval(hi)?, &mut trace);
    for _ in 0..BRACKET_EXPANSIONS {
        if hi_offset >= -options.tolerance {
            break;
        }
        hi *= EXPANSION_FACTOR;
        hi_offset = keep(eval(hi)?, &mut trace);
    }
    if lo_offset > options.tolerance || hi_offset < -options.tolerance {
        return Err(Error::InvalidParameter(format!(
            "target {target:.2} dB SPL not bracketed by sigma in [{lo:e}, {hi:e}]"
        )));
    }

    let mut converged = lo_offset.abs() <= options.tolerance || hi_offset.abs() <= options.tolerance;
    let mut steps = 0;
    while !converged && steps < options.max_steps {
        let mid = (lo * hi).sqrt();
        let offset = keep(eval(mid)?, &mut trace);
        if offset.abs() <= options.tolerance {
            converged = true;
        } else if offset > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }

    let best = best.expect("at least one evaluation");
    let achieved = match best.result {
        Evaluation::Mean(m) => m,
        _ => return Err(Error::InvalidParameter(format!("no finite threshold found near {target:.2} dB SPL"))),
    };
    let converged = (achieved - target).abs() <= options.tolerance;
    Ok(SigmaFit {
        pathway,
        sigma: best.sigma,
        target_threshold: target,
        achieved_threshold: achieved,
        n_runs_used: options.n_runs,
        converged,
        floor,
        trace,
    })
}

/// Fitted noise values for the monaural pathway and each binaural order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub anchors: Anchors,
    pub seed: u64,
    pub options: FitOptions,
    pub sigma_m: SigmaFit,
    pub sigma_b: Vec<(ProcessingOrder, SigmaFit)>,
}

impl CalibrationSet {
    pub fn sigma_b(&self, order: ProcessingOrder) -> Option<f64> {
        self.sigma_b.iter().find(|(o, _)| *o == order).map(|(_, f)| f.sigma)
    }

    /// Pathway configuration for `order`, if that order was calibrated.
    pub fn pathway(&self, order: ProcessingOrder) -> Option<PathwayConfig> {
        Some(PathwayConfig::new(order, self.sigma_m.sigma, self.sigma_b(order)?))
    }
}

fn harmonic_conditions() -> (ConditionSpec, ConditionSpec) {
    let preset = ExperimentPreset::new(ExperimentId::Exp2);
    (
        preset.condition(ConditionKey { dichotic: false, mistuned: false }).clone(),
        preset.condition(ConditionKey { dichotic: true, mistuned: false }).clone(),
    )
}

/// Fits `sigma_m` on the experiment-2 diotic harmonic condition.
pub fn calibrate_monaural(anchors: &Anchors, options: &FitOptions, seed: u64) -> Result<SigmaFit> {
    anchors.validate()?;
    let base = PathwayConfig::new(ProcessingOrder::BinauralThenMod, 0.0, 0.0);
    fit_sigma(&harmonic_conditions().0, base, anchors.diotic_harmonic(), options, derive_seed(seed, &[FIT_STREAM, 0]))
}

/// Fits `sigma_b` for each order on the experiment-2 dichotic harmonic
/// condition, with the monaural noise fixed at `sigma_m`.
pub fn calibrate_binaural(
    anchors: &Anchors,
    sigma_m: f64,
    orders: &[ProcessingOrder],
    options: &FitOptions,
    seed: u64,
) -> Result<Vec<(ProcessingOrder, SigmaFit)>> {
    anchors.validate()?;
    let dichotic = harmonic_conditions().1;
    orders
        .iter()
        .enumerate()
        .map(|(i, &order)| {
            let cfg = PathwayConfig::new(order, sigma_m, 0.0);
            let fit_seed = derive_seed(seed, &[FIT_STREAM, 1 + i as u64]);
            fit_sigma(&dichotic, cfg, anchors.dichotic_harmonic(), options, fit_seed).map(|f| (order, f))
        })
        .collect()
}

/// Fits `sigma_m`, then `sigma_b` for each order.
pub fn calibrate(
    anchors: &Anchors,
    orders: &[ProcessingOrder],
    options: &FitOptions,
    seed: u64,
) -> Result<CalibrationSet> {
    let sigma_m = calibrate_monaural(anchors, options, seed)?;
    let sigma_b = calibrate_binaural(anchors, sigma_m.sigma, orders, options, seed)?;
    Ok(CalibrationSet { anchors: *anchors, seed, options: *options, sigma_m, sigma_b })
}

fn same_masker(a: &ConditionSpec, b: &ConditionSpec) -> bool {
    a.f0 == b.f0
        && a.n_components == b.n_components
        && a.target_freq == b.target_freq
        && a.masker_level == b.masker_level
        && a.duration == b.duration
        && a.sample_rate == b.sample_rate
}

/// Release from masking by mistuning: harmonic minus mistuned mean threshold.
pub fn masking_release(mistuned: &ThresholdResult, harmonic: &ThresholdResult) -> Result<f64> {
    let (m, h) = (&mistuned.condition, &harmonic.condition);
    if !same_masker(m, h) || m.target_ipd != h.target_ipd {
        return Err(Error::MismatchedConditions(
            "masking release needs the same experiment and target IPD".into(),
        ));
    }
    Ok(harmonic.mean_threshold - mistuned.mean_threshold)
}

/// Binaural masking level difference: diotic minus dichotic mean threshold.
pub fn bmld(diotic: &ThresholdResult, dichotic: &ThresholdResult) -> Result<f64> {
    let (a, b) = (&diotic.condition, &dichotic.condition);
    if !same_masker(a, b) || a.mistuning != b.mistuning {
        return Err(Error::MismatchedConditions("BMLD needs the same experiment and mistuning".into()));
    }
    Ok(diotic.mean_threshold - dichotic.mean_threshold)
}
