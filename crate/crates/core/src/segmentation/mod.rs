//! Heart-cycle segmentation and fixed-length cycle extraction.
//!
//! States are decoded with an explicit-duration Viterbi over a cyclic
//! S1 -> systole -> S2 -> diastole model. Emissions come from the normalized
//! homomorphic and Hilbert envelopes at a 50 Hz feature rate; duration priors
//! are Gaussian, with systole and diastole derived from the heart rate found
//! by autocorrelating the homomorphic envelope.

mod cycles;
pub mod envelope;
mod hsmm;

use std::fmt::Write as _;
use std::str::FromStr;

pub use cycles::{extract_cycles, CardiacCycle, CYCLE_SECONDS};
pub use hsmm::{segment, segment_detailed, DurationBounds, SegmentConfig, Segmentation};

use crate::error::PcgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeartState {
    S1,
    Systole,
    S2,
    Diastole,
}

impl HeartState {
    pub const ALL: [HeartState; 4] = [
        HeartState::S1,
        HeartState::Systole,
        HeartState::S2,
        HeartState::Diastole,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> HeartState {
        HeartState::ALL[(self.index() + 1) % 4]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeartState::S1 => "S1",
            HeartState::Systole => "systole",
            HeartState::S2 => "S2",
            HeartState::Diastole => "diastole",
        }
    }
}

impl FromStr for HeartState {
    type Err = PcgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" => Ok(HeartState::S1),
            "systole" => Ok(HeartState::Systole),
            "s2" => Ok(HeartState::S2),
            "diastole" => Ok(HeartState::Diastole),
            other => Err(PcgError::InvalidInput(format!("unknown heart state `{other}`"))),
        }
    }
}

/// S1 and S2 onsets of `truth` that have an onset of the same state in `found`
/// within `tol` seconds, as `(hits, total)`. The two sequences may differ in rate.
pub fn boundary_recall(truth: &StateSequence, found: &StateSequence, tol: f64) -> (usize, usize) {
    let mut hits = 0;
    let mut total = 0;
    for state in [HeartState::S1, HeartState::S2] {
        let found: Vec<f64> = found.onsets(state).iter().map(|&i| i as f64 / found.rate).collect();
        for t in truth.onsets(state) {
            let t = t as f64 / truth.rate;
            total += 1;
            if found.iter().any(|f| (f - t).abs() <= tol) {
                hits += 1;
            }
        }
    }
    (hits, total)
}

/// A maximal run of one state: samples `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateRun {
    pub state: HeartState,
    pub start: usize,
    pub end: usize,
}

impl StateRun {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Per-sample heart-state labels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    pub labels: Vec<HeartState>,
    pub rate: f64,
}

impl StateSequence {
    pub fn from_runs(runs: &[StateRun], rate: f64) -> Self {
        let len = runs.last().map_or(0, |r| r.end);
        let mut labels = Vec::with_capacity(len);
        for r in runs {
            labels.extend(std::iter::repeat_n(r.state, r.len()));
        }
        StateSequence { labels, rate }
    }

    pub fn runs(&self) -> Vec<StateRun> {
        let mut runs: Vec<StateRun> = Vec::new();
        for (i, &s) in self.labels.iter().enumerate() {
            match runs.last_mut() {
                Some(r) if r.state == s => r.end = i + 1,
                _ => runs.push(StateRun {
                    state: s,
                    start: i,
                    end: i + 1,
                }),
            }
        }
        runs
    }

    /// Start samples of S1 runs. A path that opens in S1 counts sample 0 as an onset.
    pub fn s1_onsets(&self) -> Vec<usize> {
        self.runs()
            .into_iter()
            .filter(|r| r.state == HeartState::S1)
            .map(|r| r.start)
            .collect()
    }

    /// Start samples of runs of `state` that begin after the first sample.

    pub fn onsets(&self, state: HeartState) -> Vec<usize> {
        self.runs()
            .into_iter()
            .filter(|r| r.state == state && r.start > 0)
            .map(|r| r.start)
            .collect()
    }

    /// True when consecutive runs follow S1 -> systole -> S2 -> diastole -> S1.
    pub fn is_cyclic_order(&self) -> bool {
        self.runs().windows(2).all(|w| w[0].state.next() == w[1].state)
    }

    /// `sample_index,state` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_index,state\n");
        for (i, s) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", s.as_str());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_round_trip() {
        let runs = vec![
            StateRun { state: HeartState::Diastole, start: 0, end: 3 },
            StateRun { state: HeartState::S1, start: 3, end: 5 },
            StateRun { state: HeartState::Systole, start: 5, end: 9 },
        ];
        let seq = StateSequence::from_runs(&runs, 1000.0);
        assert_eq!(seq.runs(), runs);
        assert_eq!(seq.s1_onsets(), vec![3]);
        assert_eq!(seq.onsets(HeartState::Systole), vec![5]);
        assert!(seq.is_cyclic_order());
        assert!(seq.to_csv().starts_with("sample_index,state\n0,diastole\n"));
    }
}
