//! Single-channel auditory model.
//!
//! Each ear is passed through a 4th-order gammatone at 800 Hz (one ERB wide),
//! half-wave rectified and low-passed at 770 Hz (5th order). From there two
//! pathways lead to the decision stage:
//!
//! * the monaural pathway extracts the envelope with a single modulation
//!   filter per ear and adds the two magnitudes;
//! * the binaural pathway subtracts the ears (a reduced equalization and
//!   cancellation stage) either before modulation filtering, after it, or
//!   without any modulation filter at all.
//!
//! The decision variable is the energy of the pathway output, corrupted by
//! additive Gaussian noise, over the central half of the interval.

mod dump;
mod modulation;

pub use dump::{dump_stages, write_stage_csv, StageOutput};
pub use modulation::ModulationFilter;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{
    decimation_factor, decimate, erb, Butterworth, Gammatone, MonoSignal, StereoSignal, GAMMATONE_ORDER,
};

pub const PERIPHERAL_CENTER: f64 = 800.0;
pub const PERIPHERAL_LOWPASS: f64 = 770.0;
pub const PERIPHERAL_LOWPASS_ORDER: usize = 5;
pub const ENVELOPE_RATE: f64 = 2000.0;
pub const MODULATION_Q: f64 = 2.0;

/// Where the binaural difference sits relative to modulation filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessingOrder {
    BinauralThenMod,
    ModThenBinaural,
    NoModInBinaural,
}

impl ProcessingOrder {
    pub const ALL: [ProcessingOrder; 3] = [
        ProcessingOrder::BinauralThenMod,
        ProcessingOrder::ModThenBinaural,
        ProcessingOrder::NoModInBinaural,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProcessingOrder::BinauralThenMod => "binaural-then-mod",
            ProcessingOrder::ModThenBinaural => "mod-then-binaural",
            ProcessingOrder::NoModInBinaural => "no-mod-in-binaural",
        }
    }
}

impl std::fmt::Display for ProcessingOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProcessingOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProcessingOrder::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown processing order '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathwayConfig {
    pub order: ProcessingOrder,
    /// Internal-noise standard deviation of the monaural pathway.
    pub sigma_m: f64,
    /// Internal-noise standard deviation of the binaural pathway.
    pub sigma_b: f64,
    pub mod_freq_harmonic: f64,
    pub mod_freq_mistuned: f64,
}

impl PathwayConfig {
    pub fn new(order: ProcessingOrder, sigma_m: f64, sigma_b: f64) -> Self {
        Self { order, sigma_m, sigma_b, mod_freq_harmonic: 40.0, mod_freq_mistuned: 20.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_m >= 0.0 && self.sigma_b >= 0.0) {
            return Err(Error::InvalidParameter("internal noise must be >= 0".into()));
        }
        if !(self.mod_freq_harmonic > 0.0 && self.mod_freq_mistuned > 0.0) {
            return Err(Error::InvalidParameter("modulation frequencies must be > 0".into()));
        }
        Ok(())
    }

    pub fn mod_freq(&self, mistuned: bool) -> f64 {
        if mistuned {
            self.mod_freq_mistuned
        } else {
            self.mod_freq_harmonic
        }
    }

    pub fn sigma(&self, pathway: Pathway) -> f64 {
        match pathway {
            Pathway::Monaural => self.sigma_m,
            Pathway::Binaural => self.sigma_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pathway {
    Monaural,
    Binaural,
}

impl Pathway {
    /// The more sensitive pathway: binaural for dichotic targets.
    pub fn for_condition(dichotic: bool) -> Self {
        if dichotic {
            Pathway::Binaural
        } else {
            Pathway::Monaural
        }
    }
}

/// Complex-valued envelope-domain signal.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl InternalSignal {
    pub fn magnitude(&self) -> MonoSignal {
        MonoSignal {
            samples: self.samples.iter().map(|z| z.norm()).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Gammatone, rectifier and low-pass for one sample rate.
#[derive(Debug, Clone)]
pub struct Periphery {
    gammatone: Gammatone,
    lowpass: Butterworth,
    sample_rate: f64,
}

impl Periphery {
    pub fn new(sample_rate: f64) -> Result<Self> {
        Ok(Self {
            gammatone: Gammatone::new(PERIPHERAL_CENTER, erb(PERIPHERAL_CENTER), 4, sample_rate)?,
            lowpass: Butterworth::lowpass(PERIPHERAL_LOWPASS, PERIPHERAL_LOWPASS_ORDER, sample_rate)?,
            sample_rate,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channel(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(samples.len());
        self.gammatone.filter_into(samples, &mut out);
        out.iter_mut().for_each(|x| *x = x.max(0.0));
        self.lowpass.filter_in_place(&mut out);
        out
    }

    /// Gammatone, rectifier and low-pass fused into one pass over `N`
    /// channels; the arithmetic matches [`Periphery::channel`] operation for
    /// operation.
    fn lanes<const N: usize>(&self, inputs: [&[f64]; N]) -> [Vec<f64>; N] {
        const MAX_SECTIONS: usize = 6;
        let len = inputs.iter().map(|x| x.len()).min().unwrap_or(0);
        let inputs: [&[f64]; N] = std::array::from_fn(|c| &inputs[c][..len]);
        let (pole, g, scale) = self.gammatone.coefficients();
        let (pr, pi) = (pole.re, pole.im);
        let mut sections = [([0.0; 3], [0.0; 2]); MAX_SECTIONS];
        let mut n_sections = 0;
        for (slot, sec) in sections.iter_mut().zip(self.lowpass.sections()) {
            *slot = sec;
            n_sections += 1;
        }
        let sections = &sections[..n_sections];
        let mut g_re = [[0.0f64; N]; GAMMATONE_ORDER];
        let mut g_im = [[0.0f64; N]; GAMMATONE_ORDER];
        let mut s1 = [[0.0f64; N]; MAX_SECTIONS];
        let mut s2 = [[0.0f64; N]; MAX_SECTIONS];
        let mut out: [Vec<f64>; N] = std::array::from_fn(|_| vec![0.0; len]);
        for n in 0..len {
            let mut re: [f64; N] = std::array::from_fn(|c| inputs[c][n]);
            let mut im = [0.0f64; N];
            for stage in 0..GAMMATONE_ORDER {
                for c in 0..N {
                    let (sr, si) = (g_re[stage][c], g_im[stage][c]);
                    let nre = g * re[c] + pr * sr - pi * si;
                    let nim = g * im[c] + pr * si + pi * sr;
                    g_re[stage][c] = nre;
                    g_im[stage][c] = nim;
                    re[c] = nre;
                    im[c] = nim;
                }
            }
            let mut y: [f64; N] = std::array::from_fn(|c| (scale * re[c]).max(0.0));
            for (k, ([b0, b1, b2], [a1, a2])) in sections.iter().enumerate() {
                for c in 0..N {
                    let input = y[c];
                    let o = b0 * input + s1[k][c];
                    s1[k][c] = b1 * input - a1 * o + s2[k][c];
                    s2[k][c] = b2 * input - a2 * o;
                    y[c] = o;
                }
            }
            for c in 0..N {
                out[c][n] = y[c];
            }
        }
        out
    }

    /// Runs several equal-length channels through the periphery together.
    /// Each output is bit-identical to [`Periphery::channel`] on that input.
    pub fn channels(&self, inputs: &[&[f64]]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(inputs.len());
        let mut rest = inputs;
        while !rest.is_empty() {
            match rest {
                [a, b, c, d, tail @ ..] => {
                    out.extend(self.lanes([*a, *b, *c, *d]));
                    rest = tail;
                }
                [a, b, tail @ ..] => {
                    out.extend(self.lanes([*a, *b]));
                    rest = tail;
                }
                [a, tail @ ..] => {
                    out.extend(self.lanes([*a]));
                    rest = tail;
                }
                [] => unreachable!(),
            }
        }
        out
    }

    /// Peripheral outputs of several stereo intervals; diotic intervals are
    /// processed once and copied to both ears.
    pub fn process_all(&self, stimuli: &[&StereoSignal]) -> Result<Vec<StereoSignal>> {
        let mut inputs: Vec<&[f64]> = Vec::new();
        for s in stimuli {
            if s.sample_rate() != self.sample_rate {
                return Err(Error::InvalidParameter(format!(
                    "periphery built for {} Hz, stimulus at {} Hz",
                    self.sample_rate,
                    s.sample_rate()
                )));
            }
            inputs.push(&s.left.samples);
            if !s.is_diotic() {
                inputs.push(&s.right.samples);
            }
        }
        let mut outputs = self.channels(&inputs).into_iter();
        let fs = self.sample_rate;
        Ok(stimuli
            .iter()
            .map(|s| {
                let left = outputs.next().expect("one output per input");
                let right = if s.is_diotic() { left.clone() } else { outputs.next().expect("one output per input") };
                StereoSignal {
                    left: MonoSignal { samples: left, sample_rate: fs },
                    right: MonoSignal { samples: right, sample_rate: fs },
                }
            })
            .collect())
    }

    pub fn process(&self, stimulus: &StereoSignal) -> Result<StereoSignal> {
        Ok(self.process_all(&[stimulus])?.pop().expect("one output per input"))
    }
}

/// Peripheral stage applied to each ear.
pub fn peripheral(stimulus: &StereoSignal) -> Result<StereoSignal> {
    Periphery::new(stimulus.sample_rate())?.process(stimulus)
}

fn decimate_to_envelope_rate(channel: &MonoSignal) -> Result<Vec<f64>> {
    let factor = decimation_factor(channel.sample_rate, ENVELOPE_RATE)?;
    Ok(decimate(&channel.samples, factor))
}

fn remove_mean(samples: &mut [f64]) {
    if samples.is_empty() {
        return;
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.iter_mut().for_each(|x| *x -= mean);
}

/// Downsample to 2 kHz, remove the segment mean and apply the modulation
/// filter at `mod_freq`.
pub fn envelope_extract(channel: &MonoSignal, mod_freq: f64) -> Result<InternalSignal> {
    if !(mod_freq > 0.0 && mod_freq < ENVELOPE_RATE / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "modulation frequency {mod_freq} Hz must lie in (0, {}) Hz",
            ENVELOPE_RATE / 2.0
        )));
    }
    let mut env = decimate_to_envelope_rate(channel)?;
    remove_mean(&mut env);
    let filter = ModulationFilter::new(mod_freq, MODULATION_Q, ENVELOPE_RATE)?;
    Ok(InternalSignal { samples: filter.process(&env), sample_rate: ENVELOPE_RATE })
}

/// |env(left)| + |env(right)| at the envelope rate.
pub fn monaural_pathway(internal: &StereoSignal, mistuned: bool, cfg: &PathwayConfig) -> Result<MonoSignal> {
    let mod_freq = cfg.mod_freq(mistuned);
    let left = envelope_extract(&internal.left, mod_freq)?;
    let samples = if internal.is_diotic() {
        left.samples.iter().map(|z| 2.0 * z.norm()).collect()
    } else {
        let right = envelope_extract(&internal.right, mod_freq)?;
        left.samples.iter().zip(&right.samples).map(|(l, r)| l.norm() + r.norm()).collect()
    };
    Ok(MonoSignal { samples, sample_rate: ENVELOPE_RATE })
}

/// Magnitude of the interaural difference, in the configured processing order.
pub fn binaural_pathway(internal: &StereoSignal, mistuned: bool, cfg: &PathwayConfig) -> Result<MonoSignal> {
    let fs = internal.sample_rate();
    let difference = || MonoSignal {
        samples: internal.left.samples.iter().zip(&internal.right.samples).map(|(l, r)| l - r).collect(),
        sample_rate: fs,
    };
    let samples = match cfg.order {
        ProcessingOrder::BinauralThenMod => envelope_extract(&difference(), cfg.mod_freq(mistuned))?
            .samples
            .iter()
            .map(|z| z.norm())
            .collect(),
        ProcessingOrder::ModThenBinaural => {
            let mod_freq = cfg.mod_freq(mistuned);
            let left = envelope_extract(&internal.left, mod_freq)?;
            let right = envelope_extract(&internal.right, mod_freq)?;
            left.samples.iter().zip(&right.samples).map(|(l, r)| (l - r).norm()).collect()
        }
        ProcessingOrder::NoModInBinaural => {
            decimate_to_envelope_rate(&difference())?.into_iter().map(f64::abs).collect()
        }
    };
    Ok(MonoSignal { samples, sample_rate: ENVELOPE_RATE })
}

pub fn pathway_output(
    internal: &StereoSignal,
    pathway: Pathway,
    mistuned: bool,
    cfg: &PathwayConfig,
) -> Result<MonoSignal> {
    match pathway {
        Pathway::Monaural => monaural_pathway(internal, mistuned, cfg),
        Pathway::Binaural => binaural_pathway(internal, mistuned, cfg),
    }
}

/// Sample range `[0.25 N, 0.75 N)` over which energy is integrated.
pub fn analysis_window(len: usize) -> std::ops::Range<usize> {
    (len as f64 * 0.25).round() as usize..(len as f64 * 0.75).round() as usize
}

/// Energy of the noise-corrupted pathway output over the analysis window.
pub fn decision_energy<R: Rng + ?Sized>(pathway_out: &MonoSignal, sigma: f64, rng: &mut R) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let window = &pathway_out.samples[analysis_window(pathway_out.len())];
    if sigma == 0.0 {
        return Ok(window.iter().map(|x| x * x).sum());
    }
    Ok(window
        .iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(rng);
            let v = x + sigma * z;
            v * v
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stimulus::{assemble_trial, ConditionSpec, TrialOptions};
    use std::f64::consts::PI;

    const FS: f64 = 48_000.0;

    fn tone(freq: f64, amp: f64, secs: f64) -> MonoSignal {
        let n = (secs * FS) as usize;
        MonoSignal { samples: (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / FS).sin()).collect(), sample_rate: FS }
    }

    #[test]
    fn batched_periphery_matches_single_channels() {
        let spec = ConditionSpec::new(40.0, 0.0, 8, true);
        let trial = assemble_trial(&spec, 60.0, TrialOptions::default(), &mut stream(6, &[])).unwrap();
        let p = Periphery::new(FS).unwrap();
        let batch = p
            .process_all(&[&trial.reference, &trial.comparisons[0], &trial.comparisons[1]])
            .unwrap();
        for (b, s) in batch.iter().zip([&trial.reference, &trial.comparisons[0], &trial.comparisons[1]]) {
            assert_eq!(b.left.samples, p.channel(&s.left.samples));
            assert_eq!(b.right.samples, p.channel(&s.right.samples));
        }
    }

    #[test]
    fn silence_stays_silent() {
        let out = peripheral(&StereoSignal::diotic(MonoSignal::zeros(4800, FS))).unwrap();
        assert!(out.left.samples.iter().all(|&x| x == 0.0));
        let cfg = PathwayConfig::new(ProcessingOrder::NoModInBinaural, 0.0, 0.0);
        assert!(monaural_pathway(&out, false, &cfg).unwrap().samples.iter().all(|&x| x == 0.0));
        assert!(binaural_pathway(&out, false, &cfg).unwrap().samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rectified_on_frequency_tone_has_dc() {
        let out = peripheral(&StereoSignal::diotic(tone(800.0, 1.0, 0.5))).unwrap();
        let tail = &out.left.samples[12_000..];
        let dc = tail.iter().sum::<f64>() / tail.len() as f64;
        // half-wave rectified unit sine has mean 1/pi; the low-pass passes DC unchanged
        assert!((dc - 1.0 / PI).abs() < 0.01 / PI, "{dc}");
    }

    #[test]
    fn off_frequency_tone_is_suppressed() {
        let energy = |f| {
            let out = peripheral(&StereoSignal::diotic(tone(f, 1.0, 0.5))).unwrap();
            out.left.samples[12_000..].iter().map(|x| x * x).sum::<f64>()
        };
        let ratio_db = 10.0 * (energy(160.0) / energy(800.0)).log10();
        assert!(ratio_db <= -40.0, "{ratio_db}");
    }

    #[test]
    fn envelope_of_constant_is_zero() {
        let dc = MonoSignal { samples: vec![3.0; 19_200], sample_rate: FS };
        let env = envelope_extract(&dc, 40.0).unwrap();
        assert!(env.samples.iter().all(|z| z.norm() <= 3e-6));
        assert!(envelope_extract(&dc, 1000.0).is_err());
    }

    #[test]
    fn on_frequency_envelope_gain() {
        // envelope 1 + 0.5 cos(2 pi 40 t)
        let m = 0.5;
        let x = MonoSignal {
            samples: (0..48_000).map(|i| 1.0 + m * (2.0 * PI * 40.0 * i as f64 / FS).cos()).collect(),
            sample_rate: FS,
        };
        let env = envelope_extract(&x, 40.0).unwrap().magnitude();
        let tail = &env.samples[1000..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean - m).abs() < 0.05 * m, "{mean}");
    }

    #[test]
    fn off_frequency_envelope_gain_matches_transfer_function() {
        let x = MonoSignal {
            samples: (0..96_000).map(|i| (2.0 * PI * 20.0 * i as f64 / FS).cos()).collect(),
            sample_rate: FS,
        };
        let env = envelope_extract(&x, 40.0).unwrap().magnitude();
        let tail = &env.samples[1000..];
        let rms = (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt();
        // a real cosine is two half-amplitude phasors at +-20 Hz
        let f = ModulationFilter::new(40.0, MODULATION_Q, ENVELOPE_RATE).unwrap();
        let expected = 0.5 * (f.response(20.0).norm_sqr() + f.response(-20.0).norm_sqr()).sqrt();
        assert!((rms / expected - 1.0).abs() < 0.05, "{rms} vs {expected}");
    }

    #[test]
    fn diotic_input_nulls_every_binaural_order() {
        let spec = ConditionSpec::new(40.0, 2.64, 8, false);
        let trial = assemble_trial(&spec, 60.0, TrialOptions::default(), &mut stream(4, &[])).unwrap();
        let internal = peripheral(&trial.comparisons[trial.target_position]).unwrap();
        for order in ProcessingOrder::ALL {
            let cfg = PathwayConfig::new(order, 0.0, 0.0);
            let out = binaural_pathway(&internal, true, &cfg).unwrap();
            assert!(out.samples.iter().all(|&x| x == 0.0), "{order}");
        }
    }

    #[test]
    fn monaural_diotic_is_twice_one_ear() {
        let spec = ConditionSpec::new(40.0, 0.0, 8, false);
        let trial = assemble_trial(&spec, 60.0, TrialOptions::default(), &mut stream(8, &[])).unwrap();
        let internal = peripheral(&trial.reference).unwrap();
        let cfg = PathwayConfig::new(ProcessingOrder::BinauralThenMod, 0.0, 0.0);
        let out = monaural_pathway(&internal, false, &cfg).unwrap();
        let one = envelope_extract(&internal.left, 40.0).unwrap();
        assert!(out.samples.iter().zip(&one.samples).all(|(o, z)| *o == 2.0 * z.norm()));
    }

    #[test]
    fn decision_energy_closed_forms() {
        let mut rng = stream(0, &[]);
        let zeros = MonoSignal::zeros(800, ENVELOPE_RATE);
        assert_eq!(decision_energy(&zeros, 0.0, &mut rng).unwrap(), 0.0);
        let c = MonoSignal { samples: vec![0.3; 800], sample_rate: ENVELOPE_RATE };
        let e = decision_energy(&c, 0.0, &mut rng).unwrap();
        assert!((e - 0.09 * 400.0).abs() < 1e-12);

        let sigma = 0.02;
        let draws = 10_000;
        let mean = (0..draws).map(|_| decision_energy(&zeros, sigma, &mut rng).unwrap()).sum::<f64>()
            / draws as f64;
        let expected = sigma * sigma * 400.0;
        assert!((mean / expected - 1.0).abs() < 0.03, "{mean} vs {expected}");
    }

    #[test]
    fn analysis_window_is_central_half() {
        assert_eq!(analysis_window(800), 200..600);
    }

    #[test]
    fn order_names_round_trip() {
        for o in ProcessingOrder::ALL {
            assert_eq!(o.as_str().parse::<ProcessingOrder>().unwrap(), o);
        }
        assert!("sideways".parse::<ProcessingOrder>().is_err());
    }
}
