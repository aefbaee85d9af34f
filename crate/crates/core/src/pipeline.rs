//! The per-recording preprocessing chain feeding the branch CNN:
//! resample to 1 kHz, remove spikes, segment, cut and band-filter cycles.

use crate::dsp::{design_bandpass, remove_spikes, resample, FirFilter, Recording};
use crate::error::Result;
use crate::segmentation::{extract_cycles, segment, CardiacCycle, SegmentConfig, StateSequence};

/// Static four-band decomposition, Hz.
pub const BANDS: [(f64, f64); 4] = [(25.0, 45.0), (45.0, 80.0), (80.0, 200.0), (200.0, 500.0)];
pub const MODEL_RATE: f64 = 1000.0;
pub const DEFAULT_FIR_ORDER: usize = 60;

pub fn band_filters(order: usize) -> Result<Vec<FirFilter>> {
    BANDS
        .iter()
        .map(|&(lo, hi)| design_bandpass(lo, hi, MODEL_RATE, order))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub filters: Vec<FirFilter>,
    pub segment: SegmentConfig,
}

impl Preprocessor {
    pub fn new(order: usize, segment: SegmentConfig) -> Result<Self> {
        Ok(Preprocessor {
            filters: band_filters(order)?,
            segment,
        })
    }

    /// Resampled to the model rate and spike-free.
    pub fn condition(&self, rec: &Recording) -> Result<Recording> {
        Ok(remove_spikes(&resample(rec, MODEL_RATE)?))
    }

    pub fn states(&self, conditioned: &Recording) -> Result<StateSequence> {
        segment(conditioned, &self.segment)
    }

    pub fn cycles(&self, rec: &Recording) -> Result<Vec<CardiacCycle>> {
        let conditioned = self.condition(rec)?;
        let states = self.states(&conditioned)?;
        extract_cycles(&conditioned, &states, &self.filters)
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor::new(DEFAULT_FIR_ORDER, SegmentConfig::default()).expect("static band design")
    }
}
