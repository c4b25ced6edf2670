//! Summarizes a small simulation, regenerates it from its embedded config and
//! prints the model-versus-human report.
//!
//! cargo run -p binharm --example report_table

use binharm::experiment::{run_experiment, ExperimentId, ExperimentPreset, ExperimentSettings};
use binharm::model::{PathwayConfig, ProcessingOrder};
use binharm::results::{regenerate_csv, report_csv, results_csv, summarize};

fn main() -> binharm::Result<()> {
    let settings = ExperimentSettings { threshold_samples: 2, runs_per_sample: 2, ..Default::default() };
    let pathway = PathwayConfig::new(ProcessingOrder::ModThenBinaural, 1e-3, 1e-3);
    let result = run_experiment(&ExperimentPreset::new(ExperimentId::Exp2), pathway, &settings, 11)?;

    let csv = results_csv(&result);
    println!("regenerated CSV identical: {}", regenerate_csv(&csv)? == csv);
    print!("{}", report_csv(&[summarize(&result, None)]));
    Ok(())
}
