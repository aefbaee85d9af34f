//! Waveform-level primitives.

mod fir;
mod mel;
mod resample;
mod spikes;
pub mod wav;

pub use fir::{design_bandpass, fir_apply, frequency_response, FirFilter};
pub(crate) use mel::{frame_count, PowerSpectra};
pub use mel::{mel_filterbank, mel_spectrogram, threshold_db, MelSpectrogram, DB_FLOOR};
pub use resample::resample;
pub use spikes::remove_spikes;

use crate::error::{PcgError, Result};
use crate::label::Label;

/// A mono waveform with its sample rate and optional annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub samples: Vec<f64>,
    pub rate: f64,
    pub label: Option<Label>,
    pub source: String,
}

impl Recording {
    pub fn new(samples: Vec<f64>, rate: f64) -> Result<Self> {
        let rec = Recording {
            samples,
            rate,
            label: None,
            source: String::new(),
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(PcgError::InvalidInput(format!(
                "sample rate must be positive, got {}",
                self.rate
            )));
        }
        if self.samples.is_empty() {
            return Err(PcgError::InvalidInput("recording has no samples".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(PcgError::InvalidInput(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    /// Keeps at most `seconds` of audio from the start.
    pub fn clipped(&self, seconds: f64) -> Recording {
        let n = ((seconds * self.rate).round() as usize).min(self.samples.len());
        Recording {
            samples: self.samples[..n.max(1)].to_vec(),
            ..self.clone()
        }
    }

    fn derive(&self, samples: Vec<f64>, rate: f64) -> Recording {
        Recording {
            samples,
            rate,
            label: self.label,
            source: self.source.clone(),
        }
    }
}
