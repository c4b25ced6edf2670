//! Passes one dichotic target interval through the auditory model and prints
//! the RMS of every stage for each processing order.
//!
//! cargo run -p binharm --example model_stages

use binharm::model::{dump_stages, PathwayConfig, ProcessingOrder};
use binharm::psychophysics::trial_stimulus;
use binharm::stimulus::{ConditionSpec, TrialOptions};

fn main() -> binharm::Result<()> {
    let spec = ConditionSpec::new(40.0, 0.0, 8, true);
    let stim = trial_stimulus(&spec, 55.0, 3, 0, TrialOptions::default())?;
    let interval = stim.interval(stim.target_interval()).unwrap();
    for order in ProcessingOrder::ALL {
        println!("{order}");
        for stage in dump_stages(interval, false, &PathwayConfig::new(order, 0.0, 0.0))? {
            println!(
                "  {:<32} {:6} samples at {:5} Hz, rms {:.3e}",
                stage.name,
                stage.signal.len(),
                stage.signal.sample_rate,
                stage.signal.rms()
            );
        }
    }
    Ok(())
}
