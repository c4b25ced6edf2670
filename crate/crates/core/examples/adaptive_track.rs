//! Runs the 1-up/2-down staircase against a listener with a logistic
//! psychometric function and prints the trial log.
//!
//! cargo run -p binharm --example adaptive_track

use binharm::psychophysics::{run_track, LogisticObserver};
use binharm::stimulus::{ConditionSpec, TrialOptions};

fn main() -> binharm::Result<()> {
    let spec = ConditionSpec::new(40.0, 0.0, 8, false);
    let mut listener = LogisticObserver { midpoint: 50.0, spread: 2.0 };
    let track = run_track(&spec, &mut listener, TrialOptions::default(), 7)?;

    println!("trial  level  correct  step  reversal");
    for r in &track.log {
        println!("{:5}  {:5.1}  {:7}  {:4.1}  {}", r.trial, r.level, r.correct, r.step, r.reversal);
    }
    println!("threshold {:.2} dB SPL", track.threshold);
    println!("70.7% point of the listener {:.2} dB SPL", listener.level_for(1.0 / 2f64.sqrt()));
    Ok(())
}
