use binharm::signal::{
    amplitude_to_level, apply_hann_gate, erb, level_to_amplitude, Butterworth, Gammatone, MonoSignal, GAMMATONE_ORDER,
};
use proptest::prelude::*;

const FS: f64 = 48_000.0;

fn signal(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn butter(x: &[f64], f: &Butterworth) -> Vec<f64> {
    let mut y = x.to_vec();
    f.filter_in_place(&mut y);
    y
}

fn gamma(x: &[f64], g: &Gammatone) -> Vec<f64> {
    let mut y = Vec::new();
    g.filter_into(x, &mut y);
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn butterworth_is_linear(x in signal(512), y in signal(512), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = Butterworth::lowpass(770.0, 5, FS).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let expect: Vec<f64> = butter(&x, &f).iter().zip(butter(&y, &f)).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(close(&butter(&mix, &f), &expect, 1e-9));
    }

    #[test]
    fn butterworth_is_shift_invariant(x in signal(256), shift in 1usize..64) {
        let f = Butterworth::lowpass(380.0, 4, FS).unwrap();
        let mut delayed = vec![0.0; shift];
        delayed.extend_from_slice(&x);
        let y = butter(&x, &f);
        prop_assert!(close(&butter(&delayed, &f)[shift..], &y, 1e-12));
    }

    #[test]
    fn gammatone_is_linear(x in signal(512), y in signal(512), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = Gammatone::new(800.0, erb(800.0), GAMMATONE_ORDER, FS).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let expect: Vec<f64> = gamma(&x, &g).iter().zip(gamma(&y, &g)).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(close(&gamma(&mix, &g), &expect, 1e-9));
    }

    #[test]
    fn hann_gate_is_symmetric_and_bounded(len in 64usize..2000, frac in 0.0f64..0.5) {
        let ramp = (len as f64 * frac) as usize;
        let mut w = vec![1.0; len];
        apply_hann_gate(&mut w, ramp).unwrap();
        for n in 0..len {
            prop_assert!((0.0..=1.0).contains(&w[n]));
            prop_assert!((w[n] - w[len - 1 - n]).abs() < 1e-15);
        }
        prop_assert!(w[ramp..len - ramp].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn level_amplitude_round_trip(level in -40.0f64..100.0) {
        prop_assert!((amplitude_to_level(level_to_amplitude(level).unwrap()) - level).abs() < 1e-9);
    }
}

#[test]
fn filter_matches_its_own_frequency_response() {
    // Steady-state gain of a long tone equals |H(f)| for both filter types.
    let n = 48_000;
    for f in [300.0, 700.0, 800.0, 950.0] {
        let tone: Vec<f64> = (0..n).map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / FS).sin()).collect();
        let lp = Butterworth::lowpass(770.0, 5, FS).unwrap();
        let g = Gammatone::new(800.0, erb(800.0), GAMMATONE_ORDER, FS).unwrap();
        let tail_rms = |y: &[f64]| (y[n / 2..].iter().map(|v| v * v).sum::<f64>() / (n / 2) as f64).sqrt();
        let input_rms = tail_rms(&tone);
        let lp_gain = tail_rms(&butter(&tone, &lp)) / input_rms;
        let g_gain = tail_rms(&gamma(&tone, &g)) / input_rms;
        assert!((lp_gain - lp.response(f).norm()).abs() < 1e-3, "lowpass at {f}: {lp_gain}");
        assert!((g_gain - g.response(f).norm()).abs() < 1e-3, "gammatone at {f}: {g_gain}");
    }
}

#[test]
fn mono_signal_rejects_non_finite_samples() {
    assert!(MonoSignal::new(vec![0.0, f64::NAN], FS).is_err());
    assert!(MonoSignal::new(vec![0.0], 0.0).is_err());
}
