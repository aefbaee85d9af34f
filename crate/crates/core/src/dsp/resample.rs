use std::f64::consts::PI;

use crate::dsp::Recording;
use crate::error::{PcgError, Result};

const ZERO_CROSSINGS: f64 = 24.0;
const KAISER_BETA: f64 = 8.0;
/// Anti-alias cutoff as a fraction of the lower of the two sample rates.
const CUTOFF_FRACTION: f64 = 0.45;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn integral_rate(rate: f64) -> Result<u64> {
    let r = rate.round();
    if !(rate > 0.0) || (rate - r).abs() > 1e-9 {
        return Err(PcgError::Parameter(format!(
            "resampling needs positive integral rates, got {rate}"
        )));
    }
    Ok(r as u64)
}

/// Rational polyphase resampling with a Kaiser-windowed sinc anti-alias filter.
///
/// Each polyphase branch is normalized to unit DC gain, so constant signals are
/// reproduced exactly away from the edges.
pub fn resample(rec: &Recording, target_rate: f64) -> Result<Recording> {
    rec.validate()?;
    if !(target_rate > 0.0) {
        return Err(PcgError::Parameter(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    let fs_in = integral_rate(rec.rate)?;
    let fs_out = integral_rate(target_rate)?;
    if fs_in == fs_out {
        return Ok(rec.clone());
    }
    let g = gcd(fs_in, fs_out);
    let up = (fs_out / g) as usize;
    let down = (fs_in / g) as usize;

    let cutoff = CUTOFF_FRACTION * fs_in.min(fs_out) as f64;
    let fc = cutoff / (fs_in as f64 * up as f64);
    let half = (ZERO_CROSSINGS / (2.0 * fc)).ceil() as usize;
    let taps: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let j = i as f64 - half as f64;
            let arg = 2.0 * fc * j;
            let sinc = if arg == 0.0 { 1.0 } else { (PI * arg).sin() / (PI * arg) };
            let r = j / half as f64;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(KAISER_BETA);
            2.0 * fc * sinc * w
        })
        .collect();

    // phase_gain[p] = sum over taps that land on input samples for phase p
    let mut phase_gain = vec![0.0; up];
    for (i, &t) in taps.iter().enumerate() {
        // tap index i corresponds to offset j = i - half; input aligns when (p - j) % up == 0
        let j = i as i64 - half as i64;
        let phase = j.rem_euclid(up as i64) as usize;
        phase_gain[phase] += t;
    }

    let x = &rec.samples;
    let out_len = (x.len() * up).div_ceil(down);
    let mut y = Vec::with_capacity(out_len);
    for m in 0..out_len {
        let p = (m * down) as i64;
        let phase = p.rem_euclid(up as i64) as usize;
        let k_lo = (p - half as i64).div_euclid(up as i64)
            + i64::from((p - half as i64).rem_euclid(up as i64) != 0);
        let k_hi = (p + half as i64).div_euclid(up as i64);
        let mut acc = 0.0;
        for k in k_lo.max(0)..=k_hi.min(x.len() as i64 - 1) {
            let j = p - k * up as i64;
            acc += taps[(j + half as i64) as usize] * x[k as usize];
        }
        y.push(acc / phase_gain[phase]);
    }
    Ok(rec.derive(y, target_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: f64, seconds: f64) -> Vec<f64> {
        let n = (rate * seconds) as usize;
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / rate).sin())
            .collect()
    }

    /// Amplitude of the strongest DFT bin near `freq`, computed by direct sum.
    fn peak_amplitude(x: &[f64], rate: f64, freq: f64) -> f64 {
        let n = x.len();
        let k0 = (freq * n as f64 / rate).round() as i64;
        (k0 - 2..=k0 + 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &v) in x.iter().enumerate() {
                    let a = 2.0 * PI * k as f64 * i as f64 / n as f64;
                    re += v * a.cos();
                    im -= v * a.sin();
                }
                2.0 * (re * re + im * im).sqrt() / n as f64
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_is_preserved_in_interior() {
        let rec = Recording::new(vec![1.0; 8000], 4000.0).unwrap();
        let out = resample(&rec, 1000.0).unwrap();
        assert_eq!(out.rate, 1000.0);
        assert_eq!(out.samples.len(), 2000);
        for &v in &out.samples[100..1900] {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn sine_amplitude_survives_decimation() {
        let rec = Recording::new(sine(100.0, 4000.0, 2.0), 4000.0).unwrap();
        let out = resample(&rec, 1000.0).unwrap();
        let interior = &out.samples[200..1800];
        let amp = peak_amplitude(interior, 1000.0, 100.0);
        assert!((amp - 1.0).abs() < 0.01, "amp {amp}");
    }

    #[test]
    fn same_rate_is_identity() {
        let rec = Recording::new(sine(10.0, 1000.0, 0.5), 1000.0).unwrap();
        assert_eq!(resample(&rec, 1000.0).unwrap(), rec);
    }

    #[test]
    fn non_finite_input_rejected() {
        let rec = Recording {
            samples: vec![0.0, f64::NAN],
            rate: 1000.0,
            label: None,
            source: String::new(),
        };
        assert!(matches!(resample(&rec, 500.0), Err(PcgError::InvalidInput(_))));
    }

    #[test]
    fn round_trip_keeps_band_limited_sine() {
        // 150 Hz < 0.4 * 500 Hz
        let rec = Recording::new(sine(150.0, 4000.0, 2.0), 4000.0).unwrap();
        let down = resample(&rec, 1000.0).unwrap();
        let back = resample(&down, 4000.0).unwrap();
        let amp = peak_amplitude(&back.samples[800..7200], 4000.0, 150.0);
        assert!((amp - 1.0).abs() < 0.02, "amp {amp}");
    }

    #[test]
    fn aliasing_component_is_removed() {
        // 700 Hz would alias to 300 Hz at 1000 Hz
        let rec = Recording::new(sine(700.0, 4000.0, 2.0), 4000.0).unwrap();
        let out = resample(&rec, 1000.0).unwrap();
        let amp = peak_amplitude(&out.samples[200..1800], 1000.0, 300.0);
        assert!(amp < 1e-3, "alias {amp}");
    }
}
