use std::io::Write;
use std::path::Path;

use super::{binaural_pathway, monaural_pathway, Periphery, PathwayConfig};
use crate::error::Result;
use crate::signal::{MonoSignal, StereoSignal};

/// Named intermediate signal of the model chain.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub name: String,
    pub signal: MonoSignal,
}

/// Runs one interval through the model and keeps every intermediate stage.
pub fn dump_stages(stimulus: &StereoSignal, mistuned: bool, cfg: &PathwayConfig) -> Result<Vec<StageOutput>> {
    let internal = Periphery::new(stimulus.sample_rate())?.process(stimulus)?;
    let stage = |name: &str, signal: MonoSignal| StageOutput { name: name.to_string(), signal };
    Ok(vec![
        stage("stimulus_left", stimulus.left.clone()),
        stage("stimulus_right", stimulus.right.clone()),
        stage("peripheral_left", internal.left.clone()),
        stage("peripheral_right", internal.right.clone()),
        stage("monaural", monaural_pathway(&internal, mistuned, cfg)?),
        stage(&format!("binaural_{}", cfg.order), binaural_pathway(&internal, mistuned, cfg)?),
    ])
}

/// Writes `time,value` rows for one stage.
pub fn write_stage_csv(path: &Path, signal: &MonoSignal) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "time,value")?;
    for (i, v) in signal.samples.iter().enumerate() {
        writeln!(out, "{:.9},{v:e}", i as f64 / signal.sample_rate)?;
    }
    out.flush()?;
    Ok(())
}
