//! Fourth-order gammatone bandpass built from cascaded complex one-pole
//! resonators. The real part of the complex output is taken and the result is
//! normalized to 0 dB at the center frequency.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::MonoSignal;
use crate::error::{Error, Result};

/// Equivalent rectangular bandwidth (Glasberg & Moore) in Hz.
pub fn erb(freq: f64) -> f64 {
    24.7 * (4.37 * freq / 1000.0 + 1.0)
}

/// Ratio between the per-section decay bandwidth and the ERB of the
/// resulting fourth-order filter.
const ORDER4_ERB_FACTOR: f64 = 1.019;

pub const GAMMATONE_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Gammatone {
    center: f64,
    bandwidth: f64,
    sample_rate: f64,
    pole: Complex64,
    section_gain: f64,
    output_gain: f64,
}

impl Gammatone {
    /// `bandwidth` is the desired equivalent rectangular bandwidth in Hz.
    pub fn new(center: f64, bandwidth: f64, order: usize, sample_rate: f64) -> Result<Self> {
        if order != GAMMATONE_ORDER {
            return Err(Error::InvalidParameter(format!(
                "gammatone order must be {GAMMATONE_ORDER}, got {order}"
            )));
        }
        if !(center > 0.0 && center < sample_rate / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "center frequency {center} Hz outside (0, {}) Hz",
                sample_rate / 2.0
            )));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let decay = ORDER4_ERB_FACTOR * bandwidth;
        let radius = (-2.0 * PI * decay / sample_rate).exp();
        let pole = Complex64::from_polar(radius, 2.0 * PI * center / sample_rate);
        let mut filter = Self {
            center,
            bandwidth,
            sample_rate,
            pole,
            section_gain: 1.0 - radius,
            output_gain: 1.0,
        };
        filter.output_gain = 1.0 / filter.response(center).norm();
        Ok(filter)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    fn complex_response(&self, freq: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / self.sample_rate);
        (self.section_gain / (1.0 - self.pole * z_inv)).powu(GAMMATONE_ORDER as u32)
    }

    /// Frequency response of the real-valued filter at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        let h = self.complex_response(freq) + self.complex_response(-freq).conj();
        self.output_gain * h
    }

    /// Pole, per-section gain and output scale of the real output.
    pub(crate) fn coefficients(&self) -> (Complex64, f64, f64) {
        (self.pole, self.section_gain, 2.0 * self.output_gain)
    }

    pub fn filter_into(&self, input: &[f64], output: &mut Vec<f64>) {
        output.clear();
        output.reserve(input.len());
        let (pr, pi) = (self.pole.re, self.pole.im);
        let g = self.section_gain;
        let scale = 2.0 * self.output_gain;
        let mut state = [(0.0f64, 0.0f64); GAMMATONE_ORDER];
        for &x in input {
            let (mut re, mut im) = (x, 0.0);
            for s in state.iter_mut() {
                let nre = g * re + pr * s.0 - pi * s.1;
                let nim = g * im + pr * s.1 + pi * s.0;
                *s = (nre, nim);
                re = nre;
                im = nim;
            }
            output.push(scale * re);
        }
    }

    pub fn filter(&self, signal: &MonoSignal) -> Result<MonoSignal> {
        if signal.sample_rate != self.sample_rate {
            return Err(Error::InvalidParameter(format!(
                "filter designed for {} Hz applied to {} Hz signal",
                self.sample_rate, signal.sample_rate
            )));
        }
        let mut samples = Vec::new();
        self.filter_into(&signal.samples, &mut samples);
        Ok(MonoSignal { samples, sample_rate: signal.sample_rate })
    }
}

pub fn gammatone_bandpass(
    signal: &MonoSignal,
    center: f64,
    bandwidth: f64,
    order: usize,
) -> Result<MonoSignal> {
    Gammatone::new(center, bandwidth, order, signal.sample_rate)?.filter(signal)
}
