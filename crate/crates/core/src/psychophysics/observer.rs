use rand::Rng;

use crate::error::Result;
use crate::model::{decision_energy, pathway_output, Pathway, PathwayConfig, Periphery};
use crate::rng::SimRng;
use crate::stimulus::{ConditionSpec, TrialStimulus};

/// What an observer is shown on one trial. `level` and the stimulus'
/// `target_position` are available for synthetic test observers; the model
/// observer only looks at the waveforms.
pub struct Presentation<'a> {
    pub level: f64,
    pub stimulus: &'a TrialStimulus,
}

/// Something that answers a 3-interval trial with interval 2 or 3.
pub trait Observer {
    fn choose(&mut self, presentation: &Presentation<'_>, rng: &mut SimRng) -> Result<usize>;
}

fn answer(stimulus: &TrialStimulus, correct: bool) -> usize {
    if correct {
        stimulus.target_interval()
    } else {
        5 - stimulus.target_interval()
    }
}

/// Correct if and only if the level is at or above a fixed threshold.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdObserver {
    pub threshold: f64,
}

impl Observer for ThresholdObserver {
    fn choose(&mut self, p: &Presentation<'_>, _rng: &mut SimRng) -> Result<usize> {
        Ok(answer(p.stimulus, p.level >= self.threshold))
    }
}

/// Two-alternative observer whose detection probability is logistic in level:
/// `P(correct) = 1/2 + 1/2 * 1 / (1 + exp(-(level - midpoint) / spread))`.
#[derive(Debug, Clone, Copy)]
pub struct LogisticObserver {
    pub midpoint: f64,
    pub spread: f64,
}

impl LogisticObserver {
    pub fn p_correct(&self, level: f64) -> f64 {
        0.5 + 0.5 / (1.0 + (-(level - self.midpoint) / self.spread).exp())
    }

    /// Level at which `P(correct)` equals `p` (0.5 < p < 1).
    pub fn level_for(&self, p: f64) -> f64 {
        let detect = 2.0 * p - 1.0;
        self.midpoint + self.spread * (detect / (1.0 - detect)).ln()
    }
}

impl Observer for LogisticObserver {
    fn choose(&mut self, p: &Presentation<'_>, rng: &mut SimRng) -> Result<usize> {
        let correct = rng.random::<f64>() < self.p_correct(p.level);
        Ok(answer(p.stimulus, correct))
    }
}

/// Picks one of the two comparisons at random.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomObserver;

impl Observer for RandomObserver {
    fn choose(&mut self, _p: &Presentation<'_>, rng: &mut SimRng) -> Result<usize> {
        Ok(rng.random_range(2..=3))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysCorrect;

impl Observer for AlwaysCorrect {
    fn choose(&mut self, p: &Presentation<'_>, _rng: &mut SimRng) -> Result<usize> {
        Ok(p.stimulus.target_interval())
    }
}

/// The auditory model as a listener. Diotic conditions are judged on the
/// monaural pathway with `sigma_m`, dichotic ones on the binaural pathway
/// with `sigma_b`; the comparison with the larger energy is chosen and exact
/// ties are broken at random.
#[derive(Debug, Clone)]
pub struct ModelObserver {
    periphery: Periphery,
    cfg: PathwayConfig,
    pathway: Pathway,
    mistuned: bool,
}

impl ModelObserver {
    pub fn new(spec: &ConditionSpec, cfg: PathwayConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            periphery: Periphery::new(spec.sample_rate)?,
            cfg,
            pathway: Pathway::for_condition(spec.is_dichotic()),
            mistuned: spec.is_mistuned(),
        })
    }

    /// Overrides the pathway picked from the condition.
    pub fn with_pathway(mut self, pathway: Pathway) -> Self {
        self.pathway = pathway;
        self
    }

    pub fn pathway(&self) -> Pathway {
        self.pathway
    }

    pub fn config(&self) -> &PathwayConfig {
        &self.cfg
    }

    /// Decision energy of one interval.
    pub fn energy(&self, interval: &crate::signal::StereoSignal, rng: &mut SimRng) -> Result<f64> {
        let internal = self.periphery.process(interval)?;
        let out = pathway_output(&internal, self.pathway, self.mistuned, &self.cfg)?;
        decision_energy(&out, self.cfg.sigma(self.pathway), rng)
    }
}

/// Builds the model observer for a condition.
pub fn simulated_observer(spec: &ConditionSpec, cfg: PathwayConfig) -> Result<ModelObserver> {
    ModelObserver::new(spec, cfg)
}

impl Observer for ModelObserver {
    fn choose(&mut self, p: &Presentation<'_>, rng: &mut SimRng) -> Result<usize> {
        let internal = self.periphery.process_all(&[&p.stimulus.comparisons[0], &p.stimulus.comparisons[1]])?;
        let sigma = self.cfg.sigma(self.pathway);
        let mut energy = |i: &crate::signal::StereoSignal| -> Result<f64> {
            let out = pathway_output(i, self.pathway, self.mistuned, &self.cfg)?;
            decision_energy(&out, sigma, rng)
        };
        let first = energy(&internal[0])?;
        let second = energy(&internal[1])?;
        Ok(if first > second {
            2
        } else if second > first {
            3
        } else {
            rng.random_range(2..=3)
        })
    }
}
