use binharm::psychophysics::{
    run_track, AlwaysCorrect, RandomObserver, StaircaseState, ThresholdObserver, FINAL_REVERSALS, START_LEVEL,
    STEPS,
};
use binharm::stimulus::{ConditionSpec, TrialOptions};
use binharm::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn levels_stay_on_the_integer_lattice(responses in prop::collection::vec(any::<bool>(), 1..300)) {
        let mut state = StaircaseState::new(START_LEVEL);
        let mut last_step = STEPS[0];
        for correct in responses {
            if state.terminated {
                break;
            }
            let rec = state.record(correct).unwrap();
            prop_assert_eq!(rec.level.fract(), 0.0);
            prop_assert!(rec.step <= last_step);
            last_step = rec.step;
        }
        let expected = STEPS[state.reversals.len().min(4) / 2];
        prop_assert_eq!(state.step, expected);
    }

    #[test]
    fn threshold_is_the_mean_of_the_last_reversals(responses in prop::collection::vec(any::<bool>(), 400)) {
        let mut state = StaircaseState::new(START_LEVEL);
        for correct in responses {
            if state.terminated {
                break;
            }
            state.record(correct).unwrap();
        }
        if state.terminated {
            let last = &state.reversals[state.reversals.len() - FINAL_REVERSALS..];
            prop_assert!(last.iter().all(|r| r.step == STEPS[2]));
            let mean = last.iter().map(|r| r.level).sum::<f64>() / FINAL_REVERSALS as f64;
            prop_assert_eq!(state.threshold(), Some(mean));
        } else {
            prop_assert_eq!(state.threshold(), None);
        }
    }

    #[test]
    fn deterministic_listener_converges_near_its_threshold(threshold in 20.0f64..60.0, seed in any::<u64>()) {
        let spec = ConditionSpec::new(40.0, 0.0, 8, false);
        let track = run_track(&spec, &mut ThresholdObserver { threshold }, TrialOptions::default(), seed).unwrap();
        prop_assert!((track.threshold - threshold).abs() <= 1.0, "{} vs {}", track.threshold, threshold);
    }
}

#[test]
fn always_correct_listener_leaves_the_level_range() {
    let spec = ConditionSpec::new(40.0, 0.0, 8, false);
    let err = run_track(&spec, &mut AlwaysCorrect, TrialOptions::default(), 1).unwrap_err();
    assert!(matches!(err, Error::LevelOutOfBounds { level, .. } if level < -40.0), "{err}");
}

#[test]
fn guessing_listener_drifts_upward() {
    // P(two correct in a row) = 1/4 < 1/2, so a guesser climbs until the
    // level leaves the range or the track ends high.
    let spec = ConditionSpec::new(40.0, 0.0, 8, false);
    for seed in 0..5 {
        match run_track(&spec, &mut RandomObserver, TrialOptions::default(), seed) {
            Err(Error::LevelOutOfBounds { level, .. }) => assert!(level > 100.0),
            Ok(track) => assert!(track.threshold > START_LEVEL, "threshold {}", track.threshold),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn same_seed_same_track() {
    let spec = ConditionSpec::new(40.0, 2.64, 32, true);
    let mut a = ThresholdObserver { threshold: 41.3 };
    let mut b = a;
    let ta = run_track(&spec, &mut a, TrialOptions::default(), 99).unwrap();
    let tb = run_track(&spec, &mut b, TrialOptions::default(), 99).unwrap();
    assert_eq!(ta, tb);
}
