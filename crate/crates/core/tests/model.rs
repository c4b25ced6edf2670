use binharm::calibration::{bmld, masking_release};
use binharm::model::{binaural_pathway, monaural_pathway, Periphery, PathwayConfig, ProcessingOrder};
use binharm::psychophysics::{trial_stimulus, ThresholdResult};
use binharm::stimulus::{ConditionSpec, TrialOptions};
use proptest::prelude::*;

fn runs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(20.0f64..70.0, 1..10)
}

proptest! {
    #[test]
    fn release_and_bmld_are_antisymmetric(a in runs(), b in runs()) {
        let harmonic = ConditionSpec::new(40.0, 0.0, 8, false);
        let mistuned = ConditionSpec::new(40.0, 2.64, 8, false);
        let dichotic = ConditionSpec::new(40.0, 0.0, 8, true);
        let h = ThresholdResult::from_runs(harmonic, None, a.clone());
        let m = ThresholdResult::from_runs(mistuned, None, b.clone());
        let d = ThresholdResult::from_runs(dichotic, None, b);
        let r = masking_release(&m, &h).unwrap();
        prop_assert!((r + masking_release(&h, &m).unwrap()).abs() < 1e-12);
        prop_assert!((r - (h.mean_threshold - m.mean_threshold)).abs() < 1e-12);
        prop_assert!((bmld(&h, &d).unwrap() + bmld(&d, &h).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn release_rejects_mixed_experiments() {
    let exp2 = ThresholdResult::from_runs(ConditionSpec::new(40.0, 0.0, 8, false), None, vec![50.0]);
    let exp3 = ThresholdResult::from_runs(ConditionSpec::new(40.0, 2.64, 32, false), None, vec![45.0]);
    assert!(masking_release(&exp3, &exp2).is_err());
}

#[test]
fn model_stages_scale_with_input() {
    // Periphery and the mean-removed pathways are linear until the envelope;
    // scaling the whole stimulus by g scales every output by g.
    let spec = ConditionSpec::new(40.0, 0.0, 8, true);
    let stim = trial_stimulus(&spec, 55.0, 4, 0, TrialOptions::default()).unwrap();
    let interval = stim.interval(stim.target_interval()).unwrap();
    let mut louder = interval.clone();
    louder.scale(2.0);
    let periphery = Periphery::new(interval.sample_rate()).unwrap();
    let (p1, p2) = (periphery.process(interval).unwrap(), periphery.process(&louder).unwrap());
    for order in ProcessingOrder::ALL {
        let cfg = PathwayConfig::new(order, 0.0, 0.0);
        let pairs = [
            (monaural_pathway(&p1, false, &cfg).unwrap(), monaural_pathway(&p2, false, &cfg).unwrap()),
            (binaural_pathway(&p1, false, &cfg).unwrap(), binaural_pathway(&p2, false, &cfg).unwrap()),
        ];
        for (a, b) in pairs {
            let ratio = b.rms() / a.rms();
            assert!((ratio - 2.0).abs() < 1e-9, "{order}: ratio {ratio}");
        }
    }
}

#[test]
fn dichotic_target_survives_every_binaural_order() {
    let spec = ConditionSpec::new(40.0, 0.0, 8, true);
    let stim = trial_stimulus(&spec, 60.0, 8, 0, TrialOptions::default()).unwrap();
    let periphery = Periphery::new(48_000.0).unwrap();
    let with_target = periphery.process(stim.interval(stim.target_interval()).unwrap()).unwrap();
    let reference = periphery.process(&stim.reference).unwrap();
    for order in ProcessingOrder::ALL {
        let cfg = PathwayConfig::new(order, 0.0, 0.0);
        let t = binaural_pathway(&with_target, false, &cfg).unwrap().rms();
        let r = binaural_pathway(&reference, false, &cfg).unwrap().rms();
        assert!(t > 1e3 * r.max(1e-300), "{order}: target {t} reference {r}");
    }
}
