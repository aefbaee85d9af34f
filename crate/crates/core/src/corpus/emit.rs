//! Writes a synthetic corpus to disk: WAVs, a manifest and per-file state boundaries.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::synth::{synth_pcg, Murmur, SynthConfig};
use super::{CorpusEntry, LabeledCorpus};
use crate::dsp::wav::write_wav;
use crate::error::{PcgError, Result};
use crate::segmentation::{HeartState, StateRun, StateSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub count: usize,
    pub duration: f64,
    pub rate: f64,
    pub bpm: (f64, f64),
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            count: 30,
            duration: 10.0,
            rate: 4000.0,
            bpm: (55.0, 110.0),
            snr_db: 20.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Config for recording `i`; classes rotate normal, mild, severe.
    pub fn config(&self, i: usize) -> SynthConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let (lo, hi) = self.bpm;
        let bpm = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let murmur = [Murmur::None, Murmur::MildSystolic, Murmur::SevereHolosystolic][i % 3];
        SynthConfig {
            bpm,
            murmur,
            snr_db: self.snr_db,
            duration: self.duration,
            rate: self.rate,
            seed: self.seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            ..SynthConfig::default()
        }
    }
}

pub fn ground_truth_name(wav: &str) -> String {
    format!("{}.states.csv", wav.trim_end_matches(".wav"))
}

/// `sample_index,state` rows, one per state run start.
pub fn write_ground_truth(path: &Path, states: &StateSequence) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sample_index", "state"])?;
    for r in states.runs() {
        w.write_record([r.start.to_string().as_str(), r.state.as_str()])?;
    }
    w.flush().map_err(|e| PcgError::io(path, e))
}

/// Reads run starts back into a per-sample sequence of length `len`.
pub fn read_ground_truth(path: &Path, len: usize, rate: f64) -> Result<StateSequence> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut starts: Vec<(usize, HeartState)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let idx: usize = record
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| PcgError::InvalidInput(format!("{}: bad sample_index", path.display())))?;
        let state: HeartState = record.get(1).unwrap_or("").parse()?;
        if starts.last().is_some_and(|&(prev, _)| prev >= idx) || idx >= len {
            return Err(PcgError::InvalidInput(format!(
                "{}: sample indices must increase and stay below {len}",
                path.display()
            )));
        }
        starts.push((idx, state));
    }
    let runs: Vec<StateRun> = starts
        .iter()
        .enumerate()
        .map(|(i, &(start, state))| StateRun {
            state,
            start,
            end: starts.get(i + 1).map_or(len, |n| n.0),
        })
        .collect();
    Ok(StateSequence::from_runs(&runs, rate))
}

/// Generates `spec.count` recordings into `out_dir` with `manifest.csv`.
/// Waveforms are peak-normalized to 0.9 before 16-bit quantization.
pub fn emit_synthetic(out_dir: &Path, spec: &SyntheticSpec) -> Result<LabeledCorpus> {
    std::fs::create_dir_all(out_dir).map_err(|e| PcgError::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let s = synth_pcg(&spec.config(i))?;
        let name = format!("rec{i:03}.wav");
        let mut rec = s.recording.with_source(name.clone());
        let peak = rec.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            rec.samples.iter_mut().for_each(|v| *v *= 0.9 / peak);
        }
        let path: PathBuf = out_dir.join(&name);
        write_wav(&path, &rec)?;
        write_ground_truth(&out_dir.join(ground_truth_name(&name)), &s.states)?;
        entries.push(CorpusEntry::new(path, Some(s.label), "synthetic"));
    }
    let corpus = LabeledCorpus::new(entries)?;
    corpus.write_manifest(&out_dir.join("manifest.csv"), out_dir)?;
    Ok(corpus)
}
