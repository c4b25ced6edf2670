//! Trial stimuli: an equal-amplitude complex-tone masker with the target's
//! harmonic slot left empty, a pure-tone target that is either diotic or
//! phase-inverted in the right ear, and an optional uncorrelated low-pass
//! background noise.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{
    apply_hann_gate, level_to_amplitude, ramp_samples, rms_to_level, Butterworth, MonoSignal,
    StereoSignal,
};

pub const SAMPLE_RATE: f64 = 48_000.0;
pub const INTERVAL_DURATION: f64 = 0.4;
pub const GATE_RAMP: f64 = 0.025;
pub const MASKER_LEVEL: f64 = 65.0;
pub const TARGET_FREQ: f64 = 800.0;

pub const NOISE_LEVEL: f64 = 45.0;
pub const NOISE_CUTOFF: f64 = 380.0;
pub const NOISE_ORDER: usize = 4;

/// One stimulus condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    /// Nominal masker fundamental (Hz), before mistuning.
    pub f0: f64,
    /// Mistuning of the fundamental in percent.
    pub mistuning: f64,
    pub n_components: usize,
    pub target_freq: f64,
    /// Interaural phase difference of the target, radians.
    pub target_ipd: f64,
    /// Total masker level in dB SPL.
    pub masker_level: f64,
    pub duration: f64,
    pub ramp: f64,
    pub sample_rate: f64,
}

impl ConditionSpec {
    /// Condition with the fixed timing and level parameters of the task.
    pub fn new(f0: f64, mistuning: f64, n_components: usize, dichotic: bool) -> Self {
        Self {
            f0,
            mistuning,
            n_components,
            target_freq: TARGET_FREQ,
            target_ipd: if dichotic { PI } else { 0.0 },
            masker_level: MASKER_LEVEL,
            duration: INTERVAL_DURATION,
            ramp: GATE_RAMP,
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn is_dichotic(&self) -> bool {
        self.target_ipd != 0.0
    }

    pub fn is_mistuned(&self) -> bool {
        self.mistuning != 0.0
    }

    pub fn samples_per_interval(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    /// Harmonic number of the target relative to the nominal fundamental.
    pub fn target_harmonic(&self) -> Result<u32> {
        let ratio = self.target_freq / self.f0;
        let h = ratio.round();
        if (ratio - h).abs() > 1e-9 || h < 1.0 {
            return Err(Error::InvalidCondition(format!(
                "target {} Hz is not a harmonic of F0 = {} Hz",
                self.target_freq, self.f0
            )));
        }
        Ok(h as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCondition(msg));
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return bad(format!("F0 must be positive, got {}", self.f0));
        }
        if !(self.mistuning >= 0.0 && self.mistuning.is_finite()) {
            return bad(format!("mistuning must be >= 0 %, got {}", self.mistuning));
        }
        if self.n_components < 2 || self.n_components % 2 != 0 {
            return bad(format!("component count must be even and >= 2, got {}", self.n_components));
        }
        if !(self.sample_rate > 0.0 && self.duration > 0.0) {
            return bad("sample rate and duration must be positive".into());
        }
        if !(self.ramp >= 0.0 && 2 * ramp_samples(self.ramp, self.sample_rate) <= self.samples_per_interval()) {
            return bad(format!("ramp of {} s does not fit a {} s interval", self.ramp, self.duration));
        }
        if !self.masker_level.is_finite() || !self.target_ipd.is_finite() {
            return bad("masker level and target IPD must be finite".into());
        }
        let h = self.target_harmonic()?;
        if (h as usize) <= self.n_components / 2 {
            return bad(format!(
                "harmonic {h} leaves no room for {} components below the target",
                self.n_components / 2
            ));
        }
        let nyquist = self.sample_rate / 2.0;
        if self.target_freq >= nyquist {
            return Err(Error::AboveNyquist { freq: self.target_freq, nyquist });
        }
        Ok(())
    }

    /// Harmonic numbers of the masker components around the empty target slot.
    pub fn masker_harmonics(&self) -> Result<Vec<u32>> {
        self.validate()?;
        let h = self.target_harmonic()?;
        let half = (self.n_components / 2) as u32;
        Ok((h - half..h).chain(h + 1..=h + half).collect())
    }
}

/// Masker component frequencies in Hz, ascending.
pub fn component_frequencies(spec: &ConditionSpec) -> Result<Vec<f64>> {
    let f0 = spec.f0 * (1.0 + spec.mistuning / 100.0);
    let nyquist = spec.sample_rate / 2.0;
    spec.masker_harmonics()?
        .into_iter()
        .map(|h| {
            let f = h as f64 * f0;
            if f >= nyquist {
                Err(Error::AboveNyquist { freq: f, nyquist })
            } else {
                Ok(f)
            }
        })
        .collect()
}

/// Level of each masker component so the power sum equals the total level.
pub fn component_level(spec: &ConditionSpec) -> f64 {
    spec.masker_level - 10.0 * (spec.n_components as f64).log10()
}

const LANES: usize = 8;

fn add_group<const L: usize>(out: &mut [f64], group: &[(f64, f64, f64)], sample_rate: f64) {
    let mut k = [0.0; L];
    let mut prev = [0.0; L];
    let mut cur = [0.0; L];
    for (i, &(freq, amplitude, phase)) in group.iter().enumerate() {
        let w = TAU * freq / sample_rate;
        k[i] = 2.0 * w.cos();
        prev[i] = amplitude * (phase - w).sin();
        cur[i] = amplitude * phase.sin();
    }
    for v in out.iter_mut() {
        let mut sum = 0.0;
        for i in 0..L {
            sum += cur[i];
            let next = k[i] * cur[i] - prev[i];
            prev[i] = cur[i];
            cur[i] = next;
        }
        *v += sum;
    }
}

/// Adds `amplitude * sin(2 pi f n / fs + phase)` for every `(f, amplitude,
/// phase)` to `out`, using the second-order sine recurrence. Components are
/// advanced in groups of up to [`LANES`] so the recurrences run side by side.
fn add_sinusoids(out: &mut [f64], tones: &[(f64, f64, f64)], sample_rate: f64) {
    for group in tones.chunks(LANES) {
        match group.len() {
            5.. => add_group::<LANES>(out, group, sample_rate),
            3 | 4 => add_group::<4>(out, group, sample_rate),
            2 => add_group::<2>(out, group, sample_rate),
            _ => add_group::<1>(out, group, sample_rate),
        }
    }
}

fn add_sinusoid(out: &mut [f64], freq: f64, sample_rate: f64, amplitude: f64, phase: f64) {
    add_sinusoids(out, &[(freq, amplitude, phase)], sample_rate);
}

fn ungated_masker(spec: &ConditionSpec, freqs: &[f64], phases: &[f64]) -> Result<Vec<f64>> {
    if phases.len() != freqs.len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} phases, got {}",
            freqs.len(),
            phases.len()
        )));
    }
    let amp = level_to_amplitude(component_level(spec))?;
    let tones: Vec<_> = freqs.iter().zip(phases).map(|(&f, &p)| (f, amp, p)).collect();
    let mut out = vec![0.0; spec.samples_per_interval()];
    add_sinusoids(&mut out, &tones, spec.sample_rate);
    Ok(out)
}

/// Diotic, Hann-gated complex-tone masker with the given component phases.
pub fn build_masker(spec: &ConditionSpec, phases: &[f64]) -> Result<StereoSignal> {
    let freqs = component_frequencies(spec)?;
    let mut samples = ungated_masker(spec, &freqs, phases)?;
    apply_hann_gate(&mut samples, ramp_samples(spec.ramp, spec.sample_rate))?;
    Ok(StereoSignal::diotic(MonoSignal { samples, sample_rate: spec.sample_rate }))
}

fn ungated_target(spec: &ConditionSpec, level: f64, phase: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let amp = level_to_amplitude(level)?;
    let n = spec.samples_per_interval();
    let mut left = vec![0.0; n];
    add_sinusoid(&mut left, spec.target_freq, spec.sample_rate, amp, phase);
    let right = if spec.target_ipd == 0.0 {
        left.clone()
    } else if spec.target_ipd == PI {
        left.iter().map(|x| -x).collect()
    } else {
        let mut right = vec![0.0; n];
        add_sinusoid(&mut right, spec.target_freq, spec.sample_rate, amp, phase + spec.target_ipd);
        right
    };
    Ok((left, right))
}

/// Hann-gated target tone; the right ear leads by `target_ipd`.
pub fn build_target(spec: &ConditionSpec, level: f64, phase: f64) -> Result<StereoSignal> {
    spec.validate()?;
    let (mut left, mut right) = ungated_target(spec, level, phase)?;
    let ramp = ramp_samples(spec.ramp, spec.sample_rate);
    apply_hann_gate(&mut left, ramp)?;
    apply_hann_gate(&mut right, ramp)?;
    StereoSignal::new(
        MonoSignal { samples: left, sample_rate: spec.sample_rate },
        MonoSignal { samples: right, sample_rate: spec.sample_rate },
    )
}

/// Binaurally uncorrelated Gaussian noise, 380-Hz 4th-order Butterworth
/// low-passed and scaled to 45 dB SPL RMS in each ear.
pub fn background_noise<R: Rng + ?Sized>(
    duration: f64,
    sample_rate: f64,
    rng: &mut R,
) -> Result<StereoSignal> {
    let n = (duration * sample_rate).round() as usize;
    // discard the filter onset transient
    let lead = (0.05 * sample_rate) as usize;
    let filter = Butterworth::lowpass(NOISE_CUTOFF, NOISE_ORDER, sample_rate)?;
    let target_rms = 10f64.powf((NOISE_LEVEL - crate::signal::REFERENCE_LEVEL_DB) / 20.0);
    let mut channel = || -> Result<MonoSignal> {
        let mut raw = crate::signal::gaussian_noise(n + lead, 1.0, sample_rate, rng)?.samples;
        filter.filter_in_place(&mut raw);
        let mut out = MonoSignal { samples: raw.split_off(lead), sample_rate };
        let rms = out.rms();
        if rms > 0.0 {
            out.scale(target_rms / rms);
        }
        Ok(out)
    };
    let left = channel()?;
    let right = channel()?;
    StereoSignal::new(left, right)
}

/// Options controlling trial synthesis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    /// Mix an independent background-noise segment into every interval.
    pub background_noise: bool,
}

/// One 3-interval trial. Interval 1 is always the masker-only reference; the
/// two comparisons follow, and exactly one of them carries the target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStimulus {
    pub reference: StereoSignal,
    pub comparisons: [StereoSignal; 2],
    /// Index (0 or 1) of the comparison that carries the target.
    pub target_position: usize,
}

impl TrialStimulus {
    /// Interval number (2 or 3) that carries the target.
    pub fn target_interval(&self) -> usize {
        self.target_position + 2
    }

    /// Interval by presentation number 1..=3.
    pub fn interval(&self, number: usize) -> Option<&StereoSignal> {
        match number {
            1 => Some(&self.reference),
            2 => Some(&self.comparisons[0]),
            3 => Some(&self.comparisons[1]),
            _ => None,
        }
    }

    /// All three intervals joined with silent gaps of `gap` seconds.
    pub fn concatenate(&self, gap: f64) -> StereoSignal {
        let fs = self.reference.sample_rate();
        let gap_len = (gap * fs).round() as usize;
        let join = |pick: fn(&StereoSignal) -> &MonoSignal| {
            let mut samples = Vec::new();
            for (i, iv) in [&self.reference, &self.comparisons[0], &self.comparisons[1]]
                .into_iter()
                .enumerate()
            {
                if i > 0 {
                    samples.extend(std::iter::repeat_n(0.0, gap_len));
                }
                samples.extend_from_slice(&pick(iv).samples);
            }
            MonoSignal { samples, sample_rate: fs }
        };
        StereoSignal { left: join(|s| &s.left), right: join(|s| &s.right) }
    }
}

/// Synthesizes a trial with fresh random phases for every interval.
/// `target_level` of `-inf` disables the target.
pub fn assemble_trial<R: Rng + ?Sized>(
    spec: &ConditionSpec,
    target_level: f64,
    options: TrialOptions,
    rng: &mut R,
) -> Result<TrialStimulus> {
    if target_level.is_nan() || target_level == f64::INFINITY {
        return Err(Error::InvalidParameter(format!("invalid target level {target_level}")));
    }
    let freqs = component_frequencies(spec)?;
    let ramp = ramp_samples(spec.ramp, spec.sample_rate);
    let target_position = rng.random_range(0..2usize);

    let mut make_interval = |with_target: bool| -> Result<StereoSignal> {
        let phases: Vec<f64> = (0..freqs.len()).map(|_| rng.random::<f64>() * TAU).collect();
        let target_phase = rng.random::<f64>() * TAU;
        let masker = ungated_masker(spec, &freqs, &phases)?;
        let (mut left, mut right) = if with_target && target_level.is_finite() {
            let (tl, tr) = ungated_target(spec, target_level, target_phase)?;
            (
                masker.iter().zip(&tl).map(|(m, t)| m + t).collect::<Vec<_>>(),
                masker.iter().zip(&tr).map(|(m, t)| m + t).collect::<Vec<_>>(),
            )
        } else {
            (masker.clone(), masker)
        };
        apply_hann_gate(&mut left, ramp)?;
        apply_hann_gate(&mut right, ramp)?;
        let mut interval = StereoSignal {
            left: MonoSignal { samples: left, sample_rate: spec.sample_rate },
            right: MonoSignal { samples: right, sample_rate: spec.sample_rate },
        };
        if options.background_noise {
            interval.add(&background_noise(spec.duration, spec.sample_rate, rng)?)?;
        }
        Ok(interval)
    };

    let reference = make_interval(false)?;
    let first = make_interval(target_position == 0)?;
    let second = make_interval(target_position == 1)?;
    Ok(TrialStimulus { reference, comparisons: [first, second], target_position })
}

/// Measured level of a channel in dB SPL.
pub fn channel_level(signal: &MonoSignal) -> f64 {
    rms_to_level(signal.rms())
}
