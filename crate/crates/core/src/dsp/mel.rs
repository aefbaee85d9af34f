use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dsp::Recording;
use crate::error::{PcgError, Result};

/// Numerical floor of the dB scale before any thresholding.
pub const DB_FLOOR: f64 = -120.0;

/// Mel-band power in dB relative to the recording maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// T frames, each with `bands` values.
    pub frames: Vec<Vec<f64>>,
    pub bands: usize,
    pub window: f64,
    pub hop: f64,
    /// Lowest value present; every entry is >= floor.
    pub floor: f64,
}

impl MelSpectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Affine per-recording rescale of the dB values to [0, 1].
    pub fn unit_scaled(&self) -> Vec<Vec<f64>> {
        let (lo, hi) = self
            .frames
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        self.frames
            .iter()
            .map(|f| {
                f.iter()
                    .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK-style mel filters over the one-sided spectrum of an
/// `n_fft`-point transform. Returns `bands` rows of `n_fft / 2 + 1` weights.
pub fn mel_filterbank(bands: usize, n_fft: usize, rate: f64, fmin: f64, fmax: f64) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (bands + 1) as f64))
        .collect();
    let bin_hz = rate / n_fft as f64;
    (0..bands)
        .map(|b| {
            let (left, center, right) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= left || f >= right {
                        0.0
                    } else if f <= center {
                        (f - left) / (center - left)
                    } else {
                        (right - f) / (right - center)
                    }
                })
                .collect()
        })
        .collect()
}

pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Short-time power spectra of Hann-windowed frames (one-sided, `n_fft/2+1` bins).
pub(crate) struct PowerSpectra {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    n_fft: usize,
}

impl PowerSpectra {
    pub fn new(win_samples: usize, n_fft: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        PowerSpectra {
            fft,
            window: hann(win_samples),
            n_fft,
        }
    }

    pub fn frame(&self, x: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); self.n_fft];
        for (i, (&v, &w)) in x.iter().zip(&self.window).enumerate() {
            buf[i] = Complex64::new(v * w, 0.0);
        }
        self.fft.process(&mut buf);
        buf[..self.n_fft / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
    }
}

pub(crate) fn frame_count(len: usize, win: usize, hop: usize) -> usize {
    if len < win {
        0
    } else {
        1 + (len - win) / hop
    }
}

pub fn mel_spectrogram(rec: &Recording, bands: usize, window: f64, hop: f64) -> Result<MelSpectrogram> {
    if bands == 0 {
        return Err(PcgError::Parameter("band count must be positive".into()));
    }
    if !(hop > 0.0) || window < hop {
        return Err(PcgError::Parameter(format!(
            "need window >= hop > 0 (window {window} s, hop {hop} s)"
        )));
    }
    let win = (window * rec.rate).round() as usize;
    let hop_n = ((hop * rec.rate).round() as usize).max(1);
    if win == 0 || rec.samples.len() < win {
        return Err(PcgError::Parameter(format!(
            "recording of {:.3} s is shorter than the {window} s window",
            rec.duration()
        )));
    }
    let frames = frame_count(rec.samples.len(), win, hop_n);
    let spectra = PowerSpectra::new(win, win);
    let fb = mel_filterbank(bands, win, rec.rate, 0.0, rec.rate / 2.0);
    let mut energies: Vec<Vec<f64>> = Vec::with_capacity(frames);
    for t in 0..frames {
        let p = spectra.frame(&rec.samples[t * hop_n..t * hop_n + win]);
        energies.push(
            fb.iter()
                .map(|w| w.iter().zip(&p).map(|(a, b)| a * b).sum())
                .collect(),
        );
    }
    let tiny = 1e-30;
    let max = energies.iter().flatten().cloned().fold(tiny, f64::max);
    let frames: Vec<Vec<f64>> = energies
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|e| (10.0 * (e.max(tiny) / max).log10()).max(DB_FLOOR))
                .collect()
        })
        .collect();
    Ok(MelSpectrogram {
        frames,
        bands,
        window,
        hop,
        floor: DB_FLOOR,
    })
}

/// Clamps every value below `floor` dB up to `floor`.
pub fn threshold_db(spec: &MelSpectrogram, floor: f64) -> Result<MelSpectrogram> {
    if !(floor < 0.0) {
        return Err(PcgError::Parameter(format!("dB floor must be negative, got {floor}")));
    }
    Ok(MelSpectrogram {
        frames: spec
            .frames
            .iter()
            .map(|f| f.iter().map(|&v| v.max(floor)).collect())
            .collect(),
        floor: floor.max(spec.floor),
        ..spec.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()
    }

    fn spec_of(values: Vec<Vec<f64>>) -> MelSpectrogram {
        MelSpectrogram {
            bands: values[0].len(),
            frames: values,
            window: 0.32,
            hop: 0.16,
            floor: DB_FLOOR,
        }
    }

    #[test]
    fn thirty_seconds_gives_186_frames() {
        let rec = Recording::new(noise(120_000, 1), 4000.0).unwrap();
        let spec = mel_spectrogram(&rec, 126, 0.32, 0.16).unwrap();
        assert_eq!(spec.num_frames(), 186);
        assert!(spec.frames.iter().all(|f| f.len() == 126));
        let max = spec.frames.iter().flatten().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, 0.0);
    }

    #[test]
    fn too_short_is_rejected() {
        let rec = Recording::new(noise(1000, 2), 4000.0).unwrap();
        assert!(matches!(
            mel_spectrogram(&rec, 126, 0.32, 0.16),
            Err(PcgError::Parameter(_))
        ));
    }

    #[test]
    fn clamp_rule() {
        let s = spec_of(vec![vec![-80.0, -50.0, -20.0]]);
        let t = threshold_db(&s, -45.0).unwrap();
        assert_eq!(t.frames[0], vec![-45.0, -45.0, -20.0]);
        assert_eq!(t.floor, -45.0);
    }

    #[test]
    fn clamp_is_noop_above_floor() {
        let s = spec_of(vec![vec![-25.0, -10.0], vec![-5.0, 0.0]]);
        let t = threshold_db(&s, -30.0).unwrap();
        assert_eq!(t.frames, s.frames);
        let u = t.unit_scaled();
        assert_eq!(u[0][0], 0.0);
        assert_eq!(u[1][1], 1.0);
    }

    #[test]
    fn four_floors_give_four_spectrograms() {
        // decaying noise spans more than 75 dB across the recording
        let x: Vec<f64> = noise(16_000, 3)
            .iter()
            .enumerate()
            .map(|(i, v)| v * (-3.0 * i as f64 / 4000.0).exp())
            .collect();
        let rec = Recording::new(x, 4000.0).unwrap();
        let spec = mel_spectrogram(&rec, 126, 0.32, 0.16).unwrap();
        let outs: Vec<_> = [-30.0, -45.0, -60.0, -75.0]
            .iter()
            .map(|&f| threshold_db(&spec, f).unwrap())
            .collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(outs[i].frames, outs[j].frames);
            }
        }
        for (o, f) in outs.iter().zip([-30.0, -45.0, -60.0, -75.0]) {
            assert!(o.frames.iter().flatten().all(|&v| v >= f));
            assert!(o.unit_scaled().iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
