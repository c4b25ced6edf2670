//! 24-bit stereo WAV export. Full scale corresponds to an amplitude of 1.0,
//! so with the level convention a full-scale sine plays at 97 dB SPL.

use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::{MonoSignal, StereoSignal};

pub const BITS_PER_SAMPLE: u16 = 24;
const FULL_SCALE: f64 = 8_388_607.0;

fn wav_spec(signal: &StereoSignal) -> Result<WavSpec> {
    let fs = signal.sample_rate();
    if fs.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&fs) {
        return Err(Error::InvalidParameter(format!("sample rate {fs} Hz cannot be stored in a WAV header")));
    }
    Ok(WavSpec {
        channels: 2,
        sample_rate: fs as u32,
        bits_per_sample: BITS_PER_SAMPLE,
        sample_format: SampleFormat::Int,
    })
}

/// Writes `signal` as interleaved 24-bit PCM. Fails without writing anything
/// if any sample exceeds full scale.
pub fn write_wav_to<W: Write + Seek>(out: W, signal: &StereoSignal) -> Result<()> {
    let spec = wav_spec(signal)?;
    let peak = signal.left.peak().max(signal.right.peak());
    if peak > 1.0 {
        return Err(Error::Clipping { peak });
    }
    let mut writer = WavWriter::new(out, spec)?;
    for (l, r) in signal.left.samples.iter().zip(&signal.right.samples) {
        writer.write_sample((l * FULL_SCALE).round() as i32)?;
        writer.write_sample((r * FULL_SCALE).round() as i32)?;
    }
    writer.finalize()?;
    Ok(())
}

pub fn wav_bytes(signal: &StereoSignal) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    write_wav_to(&mut buf, signal)?;
    Ok(buf.into_inner())
}

pub fn write_wav(path: impl AsRef<Path>, signal: &StereoSignal) -> Result<()> {
    let bytes = wav_bytes(signal)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a 24-bit stereo file written by [`write_wav`].
pub fn read_wav_from<R: Read>(input: R) -> Result<StereoSignal> {
    let reader = WavReader::new(input)?;
    let spec = reader.spec();
    if spec.channels != 2 || spec.bits_per_sample != BITS_PER_SAMPLE || spec.sample_format != SampleFormat::Int {
        return Err(Error::InvalidParameter(format!(
            "expected 2-channel {BITS_PER_SAMPLE}-bit PCM, got {} channels at {} bits",
            spec.channels, spec.bits_per_sample
        )));
    }
    let samples = reader.into_samples::<i32>().collect::<std::result::Result<Vec<_>, _>>()?;
    let fs = spec.sample_rate as f64;
    let (mut left, mut right) = (Vec::with_capacity(samples.len() / 2), Vec::with_capacity(samples.len() / 2));
    for frame in samples.chunks_exact(2) {
        left.push(frame[0] as f64 / FULL_SCALE);
        right.push(frame[1] as f64 / FULL_SCALE);
    }
    StereoSignal::new(MonoSignal::new(left, fs)?, MonoSignal::new(right, fs)?)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<StereoSignal> {
    read_wav_from(std::io::BufReader::new(std::fs::File::open(path)?))
}
