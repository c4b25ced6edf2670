//! Sampled signals, level conventions and the DSP primitives shared by the
//! stimulus generator and the auditory model.
//!
//! Every operation processes one finite interval from zero initial state;
//! no filter state is carried from one call to the next.

mod butterworth;
mod gammatone;

pub use butterworth::{butterworth_lowpass, Butterworth};
pub use gammatone::{erb, gammatone_bandpass, Gammatone, GAMMATONE_ORDER};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level (dB SPL) assigned to a sinusoid with an RMS of 1.0.
pub const REFERENCE_LEVEL_DB: f64 = 100.0;

/// Peak amplitude of a sinusoid presented at `level` dB SPL.
pub fn level_to_amplitude(level: f64) -> Result<f64> {
    if !level.is_finite() {
        return Err(Error::InvalidParameter(format!("level must be finite, got {level}")));
    }
    Ok(std::f64::consts::SQRT_2 * 10f64.powf((level - REFERENCE_LEVEL_DB) / 20.0))
}

/// Inverse of [`level_to_amplitude`] for a sinusoid peak amplitude.
pub fn amplitude_to_level(peak: f64) -> f64 {
    REFERENCE_LEVEL_DB + 20.0 * (peak / std::f64::consts::SQRT_2).log10()
}

/// Level in dB SPL of an arbitrary waveform, from its RMS value.
pub fn rms_to_level(rms: f64) -> f64 {
    REFERENCE_LEVEL_DB + 20.0 * rms.log10()
}

/// Single-channel waveform in dimensionless pressure units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonoSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl MonoSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite sample {bad}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self { samples: vec![0.0; len], sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&mut self, gain: f64) {
        self.samples.iter_mut().for_each(|x| *x *= gain);
    }

    /// Sample-wise sum; both signals must share rate and length.
    pub fn add(&mut self, other: &MonoSignal) -> Result<()> {
        if self.len() != other.len() || self.sample_rate != other.sample_rate {
            return Err(Error::InvalidParameter(
                "cannot add signals of different length or sample rate".into(),
            ));
        }
        self.samples.iter_mut().zip(&other.samples).for_each(|(a, b)| *a += b);
        Ok(())
    }
}

/// Two-ear waveform. Both channels always share length and sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StereoSignal {
    pub left: MonoSignal,
    pub right: MonoSignal,
}

impl StereoSignal {
    pub fn new(left: MonoSignal, right: MonoSignal) -> Result<Self> {
        if left.len() != right.len() || left.sample_rate != right.sample_rate {
            return Err(Error::InvalidParameter(
                "stereo channels must share length and sample rate".into(),
            ));
        }
        Ok(Self { left, right })
    }

    pub fn diotic(channel: MonoSignal) -> Self {
        Self { right: channel.clone(), left: channel }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.left.sample_rate
    }

    /// True when both ears carry bit-identical samples.
    pub fn is_diotic(&self) -> bool {
        self.left.samples == self.right.samples
    }

    pub fn add(&mut self, other: &StereoSignal) -> Result<()> {
        self.left.add(&other.left)?;
        self.right.add(&other.right)
    }

    pub fn scale(&mut self, gain: f64) {
        self.left.scale(gain);
        self.right.scale(gain);
    }
}

/// Number of samples covered by a ramp of `ramp` seconds.
pub fn ramp_samples(ramp: f64, sample_rate: f64) -> usize {
    (ramp * sample_rate).round() as usize
}

/// Raised-cosine on/off gating in place. The first and last sample become
/// exactly zero and the gain at the ramp midpoint is exactly 0.5.
pub fn apply_hann_gate(samples: &mut [f64], ramp_len: usize) -> Result<()> {
    let len = samples.len();
    if 2 * ramp_len > len {
        return Err(Error::RampTooLong { ramp_samples: ramp_len, len });
    }
    for n in 0..ramp_len {
        let w = 0.5 * (1.0 - (std::f64::consts::PI * n as f64 / ramp_len as f64).cos());
        samples[n] *= w;
        samples[len - 1 - n] *= w;
    }
    Ok(())
}

pub fn hann_gate(signal: &MonoSignal, ramp: f64) -> Result<MonoSignal> {
    if !(ramp >= 0.0) {
        return Err(Error::InvalidParameter(format!("ramp must be non-negative, got {ramp}")));
    }
    let mut out = signal.clone();
    apply_hann_gate(&mut out.samples, ramp_samples(ramp, signal.sample_rate))?;
    Ok(out)
}

/// Integer decimation factor from `from` to `to`, if one exists.
pub fn decimation_factor(from: f64, to: f64) -> Result<usize> {
    if !(to > 0.0) || to > from {
        return Err(Error::InvalidParameter(format!("cannot decimate {from} Hz to {to} Hz")));
    }
    let ratio = from / to;
    let factor = ratio.round();
    if (ratio - factor).abs() > 1e-9 {
        return Err(Error::NonIntegerDecimation { from, to });
    }
    Ok(factor as usize)
}

/// Keeps every `factor`-th sample starting at the first. The caller is
/// responsible for band-limiting beforehand.
pub fn downsample(signal: &MonoSignal, target_rate: f64) -> Result<MonoSignal> {
    let factor = decimation_factor(signal.sample_rate, target_rate)?;
    Ok(MonoSignal {
        samples: decimate(&signal.samples, factor),
        sample_rate: target_rate,
    })
}

pub(crate) fn decimate(samples: &[f64], factor: usize) -> Vec<f64> {
    let n = samples.len() / factor;
    (0..n).map(|k| samples[k * factor]).collect()
}

/// I.i.d. zero-mean normal samples with standard deviation `sigma`.
pub fn gaussian_noise<R: Rng + ?Sized>(
    n: usize,
    sigma: f64,
    sample_rate: f64,
    rng: &mut R,
) -> Result<MonoSignal> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let samples = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect();
    Ok(MonoSignal { samples, sample_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_level_maps_to_sqrt2_peak() {
        assert!((level_to_amplitude(100.0).unwrap() - 1.414_213_56).abs() < 1e-8);
    }

    #[test]
    fn sixty_five_db_amplitude() {
        let a = level_to_amplitude(65.0).unwrap();
        assert!((a - 0.025_148_67).abs() < 1e-8, "{a}");
        // RMS of a synthesized 65-dB sine equals 10^(-35/20)
        let fs = 48_000.0;
        let s: Vec<f64> = (0..48_000)
            .map(|n| a * (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / fs).sin())
            .collect();
        let rms = MonoSignal::new(s, fs).unwrap().rms();
        assert!((rms - 10f64.powf(-35.0 / 20.0)).abs() < 1e-9);
    }

    #[test]
    fn non_finite_level_is_rejected() {
        assert!(level_to_amplitude(f64::NEG_INFINITY).is_err());
        assert!(level_to_amplitude(f64::NAN).is_err());
    }

    #[test]
    fn level_round_trip() {
        for level in [-30.0, 0.0, 45.0, 65.0, 99.5] {
            let back = amplitude_to_level(level_to_amplitude(level).unwrap());
            assert!((back - level).abs() < 1e-9);
        }
    }

    #[test]
    fn hann_gate_shape() {
        let fs = 48_000.0;
        let sig = MonoSignal::new(vec![1.0; 19_200], fs).unwrap();
        let gated = hann_gate(&sig, 0.025).unwrap();
        assert_eq!(gated.samples[0], 0.0);
        assert_eq!(*gated.samples.last().unwrap(), 0.0);
        assert!((gated.samples[600] - 0.5).abs() < 1e-12);
        // 25 ms up to (not including) 375 ms is untouched
        assert!(gated.samples[1200..18_000].iter().all(|&x| x == 1.0));
        assert_eq!(gated.len(), sig.len());
    }

    #[test]
    fn zero_ramp_is_identity() {
        let sig = MonoSignal::new(vec![0.3, -1.0, 2.0], 10.0).unwrap();
        assert_eq!(hann_gate(&sig, 0.0).unwrap(), sig);
    }

    #[test]
    fn ramp_longer_than_half_fails() {
        let sig = MonoSignal::zeros(100, 1000.0);
        assert!(matches!(hann_gate(&sig, 0.06), Err(Error::RampTooLong { .. })));
    }

    #[test]
    fn downsample_rates() {
        let sig = MonoSignal::new((0..19_201).map(|n| n as f64).collect(), 48_000.0).unwrap();
        let d = downsample(&sig, 2000.0).unwrap();
        assert_eq!(d.len(), 19_201 / 24);
        assert_eq!(d.samples[1], 24.0);
        assert_eq!(downsample(&sig, 48_000.0).unwrap(), sig);
        assert!(matches!(
            downsample(&sig, 7000.0),
            Err(Error::NonIntegerDecimation { .. })
        ));
    }

    #[test]
    fn downsampled_constant_stays_constant() {
        let sig = MonoSignal::new(vec![0.7; 4800], 48_000.0).unwrap();
        assert!(downsample(&sig, 2000.0).unwrap().samples.iter().all(|&x| x == 0.7));
    }

    #[test]
    fn noise_statistics_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(gaussian_noise(64, 0.0, 1.0, &mut rng).unwrap().samples.iter().all(|&x| x == 0.0));

        let noise = gaussian_noise(1_000_000, 0.01, 1.0, &mut rng).unwrap();
        let mean = noise.samples.iter().sum::<f64>() / noise.len() as f64;
        let sd = (noise.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
            / (noise.len() - 1) as f64)
            .sqrt();
        assert!((0.0099..=0.0101).contains(&sd), "{sd}");

        let a = gaussian_noise(32, 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = gaussian_noise(32, 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(gaussian_noise(4, -1.0, 1.0, &mut rng).is_err());
    }
}
