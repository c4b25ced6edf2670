//! Fits the monaural and binaural internal-noise levels to harmonic anchors.
//! The anchors here sit above the model's noiseless floor; small run counts
//! keep it quick.
//!
//! cargo run -p binharm --example calibrate_sigma

use binharm::calibration::{calibrate, Anchors, FitOptions};
use binharm::model::ProcessingOrder;

fn main() -> binharm::Result<()> {
    let anchors = Anchors { diotic_harmonic_rel: -6.0, harmonic_bmld: 6.0 };
    let options = FitOptions { n_runs: 8, tolerance: 1.0, ..Default::default() };
    let set = calibrate(&anchors, &[ProcessingOrder::NoModInBinaural], &options, 1)?;

    let fit = &set.sigma_m;
    println!(
        "sigma_m = {:.4e}: target {:.1}, achieved {:.2}, floor {:?}, {} steps",
        fit.sigma,
        fit.target_threshold,
        fit.achieved_threshold,
        fit.floor,
        fit.trace.len()
    );
    for (order, fit) in &set.sigma_b {
        println!(
            "sigma_b[{order}] = {:.4e}: target {:.1}, achieved {:.2}, converged {}",
            fit.sigma, fit.target_threshold, fit.achieved_threshold, fit.converged
        );
    }
    Ok(())
}
