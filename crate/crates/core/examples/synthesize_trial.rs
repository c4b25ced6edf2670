//! Synthesizes one 3-interval trial of the mistuned dichotic condition and
//! writes it as a 24-bit stereo WAV.
//!
//! cargo run -p binharm --example synthesize_trial -- [out.wav]

use binharm::audio::write_wav;
use binharm::psychophysics::trial_stimulus;
use binharm::stimulus::{channel_level, component_frequencies, ConditionSpec, TrialOptions};

fn main() -> binharm::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "trial.wav".into());
    let spec = ConditionSpec::new(40.0, 2.64, 8, true);
    let freqs = component_frequencies(&spec)?;
    println!("masker components (Hz): {freqs:.2?}");

    let stim = trial_stimulus(&spec, 55.0, 1, 0, TrialOptions { background_noise: true })?;
    let target = stim.interval(stim.target_interval()).unwrap();
    println!("target in interval {}", stim.target_interval());
    println!("reference left level {:.1} dB SPL", channel_level(&stim.reference.left));
    println!("target interval left level {:.1} dB SPL", channel_level(&target.left));

    write_wav(&out, &stim.concatenate(0.3))?;
    println!("wrote {out}");
    Ok(())
}
