//! Butterworth lowpass filters realized as a cascade of second-order sections
//! (plus one first-order section for odd orders), designed with the bilinear
//! transform and frequency prewarping so the -3 dB point lands exactly on the
//! requested cutoff.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::MonoSignal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Section {
    b: [f64; 3],
    // a0 is normalized to 1
    a: [f64; 2],
}

impl Section {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (1.0 + self.a[0] * z_inv + self.a[1] * z2)
    }

    /// Transposed direct form II, in place.
    fn run(&self, x: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + s1;
            s1 = b1 * input - a1 * y + s2;
            s2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Section>,
    cutoff: f64,
    order: usize,
    sample_rate: f64,
}

impl Butterworth {
    /// Second-order sections as `(b, a)` with `a0 = 1`.
    pub(crate) fn sections(&self) -> impl Iterator<Item = ([f64; 3], [f64; 2])> + '_ {
        self.sections.iter().map(|s| (s.b, s.a))
    }

    pub fn lowpass(cutoff: f64, order: usize, sample_rate: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff < sample_rate / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff {cutoff} Hz must lie in (0, {}) Hz",
                sample_rate / 2.0
            )));
        }
        if !(1..=12).contains(&order) {
            return Err(Error::InvalidParameter(format!("unsupported filter order {order}")));
        }

        let k = (PI * cutoff / sample_rate).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // 1/Q of the i-th analog pole pair
            let inv_q = 2.0 * (PI * (2 * i + 1) as f64 / (2 * order) as f64).sin();
            let norm = 1.0 / (1.0 + k * inv_q + k2);
            let b0 = k2 * norm;
            sections.push(Section {
                b: [b0, 2.0 * b0, b0],
                a: [2.0 * (k2 - 1.0) * norm, (1.0 - k * inv_q + k2) * norm],
            });
        }
        if order % 2 == 1 {
            let norm = 1.0 / (1.0 + k);
            sections.push(Section {
                b: [k * norm, k * norm, 0.0],
                a: [(k - 1.0) * norm, 0.0],
            });
        }
        Ok(Self { sections, cutoff, order, sample_rate })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Complex frequency response at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / self.sample_rate);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn filter_in_place(&self, samples: &mut [f64]) {
        for s in &self.sections {
            s.run(samples);
        }
    }

    pub fn filter(&self, signal: &MonoSignal) -> Result<MonoSignal> {
        if signal.sample_rate != self.sample_rate {
            return Err(Error::InvalidParameter(format!(
                "filter designed for {} Hz applied to {} Hz signal",
                self.sample_rate, signal.sample_rate
            )));
        }
        let mut out = signal.clone();
        self.filter_in_place(&mut out.samples);
        Ok(out)
    }
}

pub fn butterworth_lowpass(signal: &MonoSignal, cutoff: f64, order: usize) -> Result<MonoSignal> {
    Butterworth::lowpass(cutoff, order, signal.sample_rate)?.filter(signal)
}
