//! Synthetic heart sounds with exact ground-truth state boundaries.
//!
//! S1 and S2 are Gaussian-windowed tones. Murmurs are band-limited noise
//! (150-400 Hz) inside systole: a short mid-systolic burst for the mild class
//! and a louder burst spanning the whole of systole for the severe class.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dsp::{design_bandpass, fir_apply, Recording};
use crate::error::{PcgError, Result};
use crate::label::Label;
use crate::segmentation::{HeartState, StateRun, StateSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Murmur {
    None,
    MildSystolic,
    SevereHolosystolic,
}

impl Murmur {
    pub fn label(self) -> Label {
        match self {
            Murmur::None => Label::Normal,
            Murmur::MildSystolic => Label::Mild,
            Murmur::SevereHolosystolic => Label::Severe,
        }
    }

    pub fn for_label(label: Label) -> Murmur {
        match label {
            Label::Normal => Murmur::None,
            Label::Mild => Murmur::MildSystolic,
            Label::Severe | Label::Abnormal => Murmur::SevereHolosystolic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub bpm: f64,
    pub s1_freq: f64,
    pub s2_freq: f64,
    pub s1_duration: f64,
    pub s2_duration: f64,
    pub murmur: Murmur,
    pub snr_db: f64,
    pub duration: f64,
    pub rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            bpm: 60.0,
            s1_freq: 90.0,
            s2_freq: 120.0,
            s1_duration: 0.100,
            s2_duration: 0.080,
            murmur: Murmur::None,
            snr_db: 30.0,
            duration: 10.0,
            rate: 4000.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(30.0..=200.0).contains(&self.bpm) {
            return Err(PcgError::Parameter(format!("bpm {} outside 30..=200", self.bpm)));
        }
        if !self.snr_db.is_finite() {
            return Err(PcgError::Parameter("SNR must be finite".into()));
        }
        if !(self.duration > 0.0) || !(self.rate >= 1000.0) {
            return Err(PcgError::Parameter(
                "duration must be positive and rate at least 1000 Hz".into(),
            ));
        }
        Ok(())
    }

    /// S1-onset to S2-onset interval for the configured heart rate.
    pub fn systolic_interval(&self) -> f64 {
        0.1 + 0.25 * (60.0 / self.bpm)
    }
}

#[derive(Debug, Clone)]
pub struct SynthPcg {
    pub recording: Recording,
    pub states: StateSequence,
    pub label: Label,
}

fn add_tone(x: &mut [f64], rate: f64, start: f64, duration: f64, freq: f64, amp: f64) {
    let sigma = duration / 6.0;
    let center = start + duration / 2.0;
    let a = (start * rate).round().max(0.0) as usize;
    let b = (((start + duration) * rate).round() as usize).min(x.len());
    for (i, v) in x.iter_mut().enumerate().take(b).skip(a) {
        let t = i as f64 / rate;
        let g = (-0.5 * ((t - center) / sigma).powi(2)).exp();
        *v += amp * g * (2.0 * PI * freq * (t - start)).sin();
    }
}

pub fn synth_pcg(cfg: &SynthConfig) -> Result<SynthPcg> {
    cfg.validate()?;
    let rate = cfg.rate;
    let n = (cfg.duration * rate).round() as usize;
    let rr = 60.0 / cfg.bpm;
    let sys = cfg.systolic_interval();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let murmur_filter = design_bandpass(150.0, 400.0, rate, 120)?;
    let noise_len = n + murmur_filter.order();
    let white: Vec<f64> = (0..noise_len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let band_noise = fir_apply(&murmur_filter, &white)[murmur_filter.order()..].to_vec();
    let band_rms = (band_noise.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();

    let mut x = vec![0.0; n];
    let mut runs = Vec::new();
    let to_idx = |t: f64| ((t * rate).round() as usize).min(n);
    let mut k = 0usize;
    loop {
        let onset = k as f64 * rr;
        if to_idx(onset) >= n {
            break;
        }
        let s1_end = onset + cfg.s1_duration;
        let s2_on = onset + sys;
        let s2_end = s2_on + cfg.s2_duration;
        let next = onset + rr;
        for (state, a, b) in [
            (HeartState::S1, onset, s1_end),
            (HeartState::Systole, s1_end, s2_on),
            (HeartState::S2, s2_on, s2_end),
            (HeartState::Diastole, s2_end, next),
        ] {
            let (ia, ib) = (to_idx(a), to_idx(b));
            if ia < ib {
                runs.push(StateRun { state, start: ia, end: ib });
            }
        }
        add_tone(&mut x, rate, onset, cfg.s1_duration, cfg.s1_freq, 1.0);
        add_tone(&mut x, rate, s2_on, cfg.s2_duration, cfg.s2_freq, 0.8);

        let (m_start, m_end, amp) = match cfg.murmur {
            Murmur::None => (0.0, 0.0, 0.0),
            Murmur::MildSystolic => {
                let span = s2_on - s1_end;
                (s1_end + 0.3 * span, s1_end + 0.7 * span, 0.12)
            }
            Murmur::SevereHolosystolic => (s1_end, s2_on, 0.35),
        };
        if amp > 0.0 {
            let (a, b) = (to_idx(m_start), to_idx(m_end));
            let len = (b - a).max(1) as f64;
            for i in a..b {
                // raised-cosine taper keeps the burst edges soft
                let w = 0.5 - 0.5 * (2.0 * PI * (i - a) as f64 / len).cos();
                x[i] += amp * w * band_noise[i] / band_rms;
            }
        }
        k += 1;
    }

    let power = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let noise_sd = (power / 10f64.powf(cfg.snr_db / 10.0)).sqrt();
    for v in &mut x {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += noise_sd * e;
    }
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= 0.9 / peak);
    }

    let label = cfg.murmur.label();
    let recording = Recording::new(x, rate)?.with_label(Some(label));
    Ok(SynthPcg {
        recording,
        states: StateSequence::from_runs(&runs, rate),
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onsets_on_the_beat() {
        let s = synth_pcg(&SynthConfig::default()).unwrap();
        let onsets: Vec<usize> = s
            .states
            .runs()
            .iter()
            .filter(|r| r.state == HeartState::S1)
            .map(|r| r.start)
            .collect();
        assert_eq!(onsets, (0..10).map(|k| k * 4000).collect::<Vec<_>>());
        assert_eq!(s.states.labels.len(), s.recording.samples.len());
        assert!(s.states.is_cyclic_order());
    }

    #[test]
    fn same_seed_same_waveform() {
        let cfg = SynthConfig {
            murmur: Murmur::MildSystolic,
            seed: 9,
            ..SynthConfig::default()
        };
        let a = synth_pcg(&cfg).unwrap();
        let b = synth_pcg(&cfg).unwrap();
        assert!(a
            .recording
            .samples
            .iter()
            .zip(&b.recording.samples)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn rejects_out_of_range_rate() {
        let cfg = SynthConfig { bpm: 250.0, ..SynthConfig::default() };
        assert!(synth_pcg(&cfg).is_err());
    }
}
