use log::warn;

use super::StateSequence;
use crate::dsp::{fir_apply, FirFilter, Recording};
use crate::error::{PcgError, Result};

/// Every cycle is zero padded (or truncated) to this duration.
pub const CYCLE_SECONDS: f64 = 2.5;

/// One S1-to-S1 span, padded to a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct CardiacCycle {
    /// Unfiltered span, the input of learnable front-ends.
    pub raw: Vec<f64>,
    /// One filtered copy of the span per band.
    pub bands: Vec<Vec<f64>>,
    /// Samples of the true cycle before padding (capped at the fixed length).
    pub len: usize,
    pub parent: String,
    pub index: usize,
}

impl CardiacCycle {
    pub fn padded_len(&self) -> usize {
        self.raw.len()
    }
}

fn pad_to(mut x: Vec<f64>, len: usize) -> Vec<f64> {
    x.resize(len, 0.0);
    x
}

/// Cuts the recording at consecutive S1 onsets and filters each span.
///
/// Leading and trailing partial cycles are discarded. Spans longer than
/// 2.5 s are truncated.
pub fn extract_cycles(
    rec: &Recording,
    states: &StateSequence,
    filters: &[FirFilter],
) -> Result<Vec<CardiacCycle>> {
    if states.labels.len() != rec.samples.len() {
        return Err(PcgError::Shape(format!(
            "state path covers {} samples, recording has {}",
            states.labels.len(),
            rec.samples.len()
        )));
    }
    let fixed = (CYCLE_SECONDS * rec.rate).round() as usize;
    let onsets = states.s1_onsets();
    let mut cycles = Vec::with_capacity(onsets.len().saturating_sub(1));
    for (index, w) in onsets.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let mut span = &rec.samples[a..b];
        if span.len() > fixed {
            warn!(
                "{}: cycle {index} lasts {:.3} s, truncating to {CYCLE_SECONDS} s",
                rec.source,
                span.len() as f64 / rec.rate
            );
            span = &span[..fixed];
        }
        let bands = filters
            .iter()
            .map(|f| pad_to(fir_apply(f, span), fixed))
            .collect();
        cycles.push(CardiacCycle {
            raw: pad_to(span.to_vec(), fixed),
            bands,
            len: span.len(),
            parent: rec.source.clone(),
            index,
        });
    }
    Ok(cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{HeartState, StateRun};

    fn path(spans: &[usize], rate: f64) -> StateSequence {
        // diastole lead-in, then cycles of S1 (10) / systole / S2 (10) / diastole
        let mut runs = vec![StateRun { state: HeartState::Diastole, start: 0, end: 50 }];
        let mut t = 50;
        for &len in spans {
            let q = [10, len / 2 - 10, 10, len - len / 2 - 10];
            for (s, d) in HeartState::ALL.iter().zip(q) {
                runs.push(StateRun { state: *s, start: t, end: t + d });
                t += d;
            }
        }
        runs.push(StateRun { state: HeartState::S1, start: t, end: t + 10 });
        StateSequence::from_runs(&runs, rate)
    }

    fn filters() -> Vec<FirFilter> {
        (0..4).map(|_| FirFilter::new(vec![1.0]).unwrap()).collect()
    }

    #[test]
    fn short_cycle_is_zero_padded() {
        let states = path(&[1800], 1000.0);
        let rec = Recording::new(vec![0.5; states.labels.len()], 1000.0).unwrap();
        let cycles = extract_cycles(&rec, &states, &filters()).unwrap();
        assert_eq!(cycles.len(), 1);
        let c = &cycles[0];
        assert_eq!(c.len, 1800);
        for band in &c.bands {
            assert_eq!(band.len(), 2500);
            assert!(band[1800..].iter().all(|&v| v == 0.0));
            assert!(band[..1800].iter().all(|&v| v == 0.5));
        }
    }

    #[test]
    fn long_cycle_is_truncated() {
        let states = path(&[2600], 1000.0);
        let rec = Recording::new(vec![1.0; states.labels.len()], 1000.0).unwrap();
        let cycles = extract_cycles(&rec, &states, &filters()).unwrap();
        assert_eq!(cycles[0].raw.len(), 2500);
        assert_eq!(cycles[0].len, 2500);
        assert!(cycles[0].raw.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn count_matches_complete_spans() {
        let states = path(&[800; 7], 1000.0);
        let rec = Recording::new(vec![0.1; states.labels.len()], 1000.0).unwrap();
        let cycles = extract_cycles(&rec, &states, &filters()).unwrap();
        assert_eq!(cycles.len(), 7);
        assert_eq!(cycles.iter().map(|c| c.index).collect::<Vec<_>>(), (0..7).collect::<Vec<_>>());
    }
}
