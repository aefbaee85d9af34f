//! Mono WAV input/output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::Recording;
use crate::error::{PcgError, Result};

/// Reads a mono 16-bit PCM or 32-bit float WAV, normalized to [-1, 1].
pub fn read_wav(path: &Path) -> Result<Recording> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(PcgError::InvalidInput(format!(
            "{}: expected mono audio, found {} channels",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(PcgError::InvalidInput(format!(
                "{}: unsupported sample format {fmt:?}/{bits} bit",
                path.display()
            )))
        }
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Recording::new(samples, spec.sample_rate as f64)?.with_source(name))
}

/// Writes a recording as mono 16-bit PCM; samples are clipped to [-1, 1].
pub fn write_wav(path: &Path, rec: &Recording) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: rec.rate.round() as u32,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in &rec.samples {
        writer.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm16_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let rec = Recording::new(vec![0.0, 0.5, -0.5, 0.999], 4000.0).unwrap();
        write_wav(&path, &rec).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.rate, 4000.0);
        for (a, b) in rec.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() < 1e-4);
        }
        assert_eq!(back.source, "a.wav");
    }

    #[test]
    fn float_and_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 2000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for v in [0.25f32, -0.75] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(read_wav(&path).unwrap().samples, vec![0.25, -0.75]);

        let stereo = dir.path().join("s.wav");
        let spec = WavSpec { channels: 2, ..spec };
        let mut w = WavWriter::create(&stereo, spec).unwrap();
        w.write_sample(0.0f32).unwrap();
        w.write_sample(0.0f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&stereo), Err(PcgError::InvalidInput(_))));
    }
}
