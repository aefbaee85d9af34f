//! Whole-recording acoustic features: 20 frame-level descriptors plus their
//! deltas, each summarised by 13 functionals (40 x 13 = 520 values).

use std::io::Write;
use std::path::Path;

use crate::dsp::{frame_count, mel_filterbank, PowerSpectra, Recording};
use crate::error::{PcgError, Result};

pub const FRAME_SECONDS: f64 = 0.025;
pub const HOP_SECONDS: f64 = 0.010;
pub const N_MFCC: usize = 13;
pub const MFCC_FILTERS: usize = 26;
pub const ROLLOFF: f64 = 0.85;
const ENERGY_EPS: f64 = 1e-10;

pub const BASE_LLDS: [&str; 7] = [
    "log_energy",
    "rms",
    "zcr",
    "spectral_centroid",
    "spectral_flux",
    "spectral_rolloff85",
    "spectral_flatness",
];

pub const FUNCTIONALS: [&str; 13] = [
    "mean", "std", "min", "max", "range", "median", "q1", "q3", "iqr", "skewness", "kurtosis", "slope", "offset",
];

/// Floor of the log-energy descriptor (a silent frame).
pub fn log_energy_floor() -> f64 {
    ENERGY_EPS.ln()
}

/// Descriptor names in column order, deltas last.
pub fn lld_names() -> Vec<String> {
    let mut base: Vec<String> = (0..N_MFCC).map(|i| format!("mfcc{i}")).collect();
    base.extend(BASE_LLDS.iter().map(|s| s.to_string()));
    let deltas: Vec<String> = base.iter().map(|n| format!("{n}_delta")).collect();
    base.extend(deltas);
    base
}

pub fn feature_names() -> Vec<String> {
    lld_names()
        .iter()
        .flat_map(|c| FUNCTIONALS.iter().map(move |f| format!("{c}__{f}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LldFrames {
    /// T rows of 40 values.
    pub frames: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub frame_seconds: f64,
    pub hop_seconds: f64,
}

impl LldFrames {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f[j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticFeatures {
    pub values: Vec<f64>,
    pub names: Vec<String>,
}

fn dct_matrix(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    let scale0 = (1.0 / n_in as f64).sqrt();
    let scale = (2.0 / n_in as f64).sqrt();
    (0..n_out)
        .map(|k| {
            (0..n_in)
                .map(|n| {
                    let s = if k == 0 { scale0 } else { scale };
                    s * (std::f64::consts::PI * k as f64 * (n as f64 + 0.5) / n_in as f64).cos()
                })
                .collect()
        })
        .collect()
}

/// Regression deltas over +-2 frames with replicated edges.
pub fn deltas(track: &[f64]) -> Vec<f64> {
    let t = track.len();
    if t == 0 {
        return Vec::new();
    }
    let at = |i: isize| track[i.clamp(0, t as isize - 1) as usize];
    (0..t as isize)
        .map(|i| (at(i + 1) - at(i - 1) + 2.0 * (at(i + 2) - at(i - 2))) / 10.0)
        .collect()
}

/// Frame-level descriptors with 25 ms Hann frames every 10 ms.
pub fn extract_llds(rec: &Recording) -> Result<LldFrames> {
    let win = (FRAME_SECONDS * rec.rate).round() as usize;
    let hop = ((HOP_SECONDS * rec.rate).round() as usize).max(1);
    if win < 2 || rec.samples.len() < win {
        return Err(PcgError::Parameter(format!(
            "recording of {} samples is shorter than one {win}-sample frame",
            rec.samples.len()
        )));
    }
    let n_fft = win.next_power_of_two();
    let spectra = PowerSpectra::new(win, n_fft);
    let fb = mel_filterbank(MFCC_FILTERS, n_fft, rec.rate, 0.0, rec.rate / 2.0);
    let dct = dct_matrix(N_MFCC, MFCC_FILTERS);
    let bin_hz = rec.rate / n_fft as f64;
    let t = frame_count(rec.samples.len(), win, hop);
    let base = N_MFCC + BASE_LLDS.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(t);
    let mut prev_mag: Option<Vec<f64>> = None;
    for i in 0..t {
        let x = &rec.samples[i * hop..i * hop + win];
        let p = spectra.frame(x);
        let mut row = Vec::with_capacity(2 * base);
        let logmel: Vec<f64> = fb
            .iter()
            .map(|w| (w.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() + ENERGY_EPS).ln())
            .collect();
        row.extend(dct.iter().map(|d| d.iter().zip(&logmel).map(|(a, b)| a * b).sum::<f64>()));
        let energy: f64 = x.iter().map(|v| v * v).sum();
        row.push(energy.max(ENERGY_EPS).ln());
        row.push((energy / win as f64).sqrt());
        let crossings = x.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        row.push(crossings as f64 / (win - 1) as f64);
        let total: f64 = p.iter().sum();
        let centroid = if total > 0.0 {
            p.iter().enumerate().map(|(k, v)| k as f64 * bin_hz * v).sum::<f64>() / total
        } else {
            0.0
        };
        row.push(centroid);
        let mag: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
        let flux = prev_mag
            .as_ref()
            .map_or(0.0, |m| m.iter().zip(&mag).map(|(a, b)| (a - b).powi(2)).sum::<f64>());
        row.push(flux);
        prev_mag = Some(mag);
        let mut roll = 0.0;
        if total > 0.0 {
            let mut acc = 0.0;
            for (k, v) in p.iter().enumerate() {
                acc += v;
                if acc >= ROLLOFF * total {
                    roll = k as f64 * bin_hz;
                    break;
                }
            }
        }
        row.push(roll);
        let geo = (p.iter().map(|v| (v + ENERGY_EPS).ln()).sum::<f64>() / p.len() as f64).exp();
        row.push(geo / (total / p.len() as f64 + ENERGY_EPS));
        rows.push(row);
    }
    for j in 0..base {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        for (r, d) in rows.iter_mut().zip(deltas(&col)) {
            r.push(d);
        }
    }
    Ok(LldFrames {
        frames: rows,
        names: lld_names(),
        frame_seconds: FRAME_SECONDS,
        hop_seconds: HOP_SECONDS,
    })
}

/// Linear-interpolation quantile of sorted data (position q * (n - 1)).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// The 13 functionals of one track, in `FUNCTIONALS` order.
pub fn functionals(x: &[f64]) -> Result<[f64; 13]> {
    let n = x.len();
    if n < 2 {
        return Err(PcgError::Parameter(format!("functionals need at least 2 frames, got {n}")));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / nf;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let std = m2.sqrt();
    let (skew, kurt) = if m2 > 1e-24 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q1, med, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
    let t_mean = (nf - 1.0) / 2.0;
    let sxx: f64 = (0..n).map(|t| (t as f64 - t_mean).powi(2)).sum();
    let sxy: f64 = x.iter().enumerate().map(|(t, v)| (t as f64 - t_mean) * (v - mean)).sum();
    let slope = sxy / sxx;
    let offset = mean - slope * t_mean;
    let (min, max) = (sorted[0], sorted[n - 1]);
    Ok([mean, std, min, max, max - min, med, q1, q3, q3 - q1, skew, kurt, slope, offset])
}

pub fn apply_functionals(llds: &LldFrames) -> Result<AcousticFeatures> {
    let d = llds.names.len();
    let mut values = Vec::with_capacity(d * FUNCTIONALS.len());
    for j in 0..d {
        values.extend(functionals(&llds.column(j))?);
    }
    Ok(AcousticFeatures {
        values,
        names: llds
            .names
            .iter()
            .flat_map(|c| FUNCTIONALS.iter().map(move |f| format!("{c}__{f}")))
            .collect(),
    })
}

pub fn extract_features(rec: &Recording) -> Result<AcousticFeatures> {
    apply_functionals(&extract_llds(rec)?)
}

/// Header `filename,<feature names>`, one row per recording.
pub fn write_features_csv(path: &Path, rows: &[(String, AcousticFeatures)]) -> Result<()> {
    let io = |e| PcgError::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let names = rows.first().map(|(_, f)| f.names.clone()).unwrap_or_else(feature_names);
    writeln!(w, "filename,{}", names.join(",")).map_err(io)?;
    for (file, f) in rows {
        if f.names != names {
            return Err(PcgError::Shape("feature rows use different column sets".into()));
        }
        let vals: Vec<String> = f.values.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{file},{}", vals.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: f64, secs: f64) -> Recording {
        let n = (rate * secs) as usize;
        Recording::new(
            (0..n).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate).sin()).collect(),
            rate,
        )
        .unwrap()
    }

    #[test]
    fn dimensions() {
        let l = extract_llds(&sine(100.0, 4000.0, 1.0)).unwrap();
        assert!(l.frames.iter().all(|f| f.len() == 40));
        assert_eq!(l.names.len(), 40);
        let f = apply_functionals(&l).unwrap();
        assert_eq!(f.values.len(), 520);
        assert_eq!(f.names, feature_names());
    }

    #[test]
    fn silence() {
        let rec = Recording::new(vec![0.0; 4000], 4000.0).unwrap();
        let l = extract_llds(&rec).unwrap();
        let first = &l.frames[0];
        assert_eq!(first[N_MFCC], log_energy_floor());
        assert_eq!(first[N_MFCC + 2], 0.0);
        assert!(l.frames.iter().all(|f| f == first));
    }

    #[test]
    fn sine_centroid_within_a_bin() {
        let rate = 4000.0;
        let l = extract_llds(&sine(100.0, rate, 1.0)).unwrap();
        let bin = rate / 128.0;
        for f in &l.frames {
            assert!((f[N_MFCC + 3] - 100.0).abs() <= bin, "{}", f[N_MFCC + 3]);
        }
    }

    #[test]
    fn too_short() {
        let rec = Recording::new(vec![0.1; 50], 4000.0).unwrap();
        assert!(matches!(extract_llds(&rec), Err(PcgError::Parameter(_))));
    }

    #[test]
    fn constant_and_ramp_functionals() {
        let c = functionals(&[2.5; 6]).unwrap();
        assert_eq!((c[0], c[1], c[4], c[11], c[12]), (2.5, 0.0, 0.0, 0.0, 2.5));
        let r = functionals(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((r[11] - 1.0).abs() < 1e-12);
        assert!(r[12].abs() < 1e-12);
        assert_eq!(r[0], 1.5);
        assert!(functionals(&[1.0]).is_err());
    }

    #[test]
    fn deltas_of_ramp_are_one_inside() {
        let d = deltas(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        for v in &d[2..5] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
