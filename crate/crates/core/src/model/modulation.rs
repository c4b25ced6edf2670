use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// First-order complex resonator on the envelope.
///
/// The output is complex; its magnitude is the band envelope. The gain is set
/// so a real sinusoid at the center frequency yields an output magnitude equal
/// to its amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationFilter {
    center: f64,
    q: f64,
    sample_rate: f64,
    pole: Complex64,
    gain: f64,
}

impl ModulationFilter {
    pub fn new(center: f64, q: f64, sample_rate: f64) -> Result<Self> {
        if !(center > 0.0 && center < sample_rate / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "modulation frequency {center} Hz must lie in (0, {}) Hz",
                sample_rate / 2.0
            )));
        }
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("quality factor must be positive, got {q}")));
        }
        let bandwidth = center / q;
        let radius = (-PI * bandwidth / sample_rate).exp();
        Ok(Self {
            center,
            q,
            sample_rate,
            pole: Complex64::from_polar(radius, 2.0 * PI * center / sample_rate),
            gain: 2.0 * (1.0 - radius),
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Complex transfer function at `freq` Hz (negative frequencies allowed).
    pub fn response(&self, freq: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / self.sample_rate);
        self.gain / (1.0 - self.pole * z_inv)
    }

    pub fn process(&self, input: &[f64]) -> Vec<Complex64> {
        let mut state = Complex64::new(0.0, 0.0);
        input
            .iter()
            .map(|&x| {
                state = self.pole * state + self.gain * x;
                state
            })
            .collect()
    }
}
