use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Magnitude of the analytic signal.
pub fn hilbert_envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    // keep DC (and Nyquist for even n), double positive frequencies, drop negative ones
    let half = n.div_ceil(2);
    for (k, c) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            continue;
        }
        if k < half || (n % 2 == 0 && k < n / 2) {
            *c *= 2.0;
        } else {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.norm() / n as f64).collect()
}

/// Zero-phase windowed-sinc low-pass (odd length, centered).
pub fn lowpass_same(x: &[f64], cutoff: f64, rate: f64, half_len: usize) -> Vec<f64> {
    let fc = cutoff / rate;
    let len = 2 * half_len + 1;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let m = i as f64 - half_len as f64;
            let s = if m == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * m).sin() / (PI * m) };
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos();
            s * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let j = i + k as isize - half_len as isize;
                if (0..n).contains(&j) {
                    acc += t * x[j as usize];
                    wsum += t;
                }
            }
            // renormalize at the edges so a constant stays constant
            if wsum.abs() > 1e-12 {
                acc / wsum
            } else {
                acc
            }
        })
        .collect()
}

/// exp(low-pass(log(hilbert envelope))) with an 8 Hz cutoff.
pub fn homomorphic_envelope(hilbert: &[f64], rate: f64) -> Vec<f64> {
    let logs: Vec<f64> = hilbert.iter().map(|&v| v.max(1e-10).ln()).collect();
    let half = (0.125 * rate).round() as usize;
    lowpass_same(&logs, 8.0, rate, half.max(1))
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Block-average down to `step`-sample frames; the last frame may be partial.
pub fn block_mean(x: &[f64], step: usize) -> Vec<f64> {
    x.chunks(step)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Z-score normalization; `None` for a constant input.
pub fn standardize(x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 1e-12) {
        return None;
    }
    Some(x.iter().map(|v| (v - mean) / sd).collect())
}

/// Normalized autocorrelation for lags 0..max_lag (inclusive).
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let r0: f64 = c.iter().map(|v| v * v).sum();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|lag| {
            let r: f64 = c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum();
            if r0 > 0.0 {
                r / r0
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_of_sine_is_flat() {
        let n = 1000;
        let x: Vec<f64> = (0..n).map(|i| 0.7 * (2.0 * PI * 50.0 * i as f64 / 1000.0).sin()).collect();
        let e = hilbert_envelope(&x);
        for &v in &e[50..950] {
            assert!((v - 0.7).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn lowpass_keeps_constants() {
        let y = lowpass_same(&[2.0; 300], 8.0, 1000.0, 125);
        assert!(y.iter().all(|v| (v - 2.0).abs() < 1e-9));
    }

    #[test]
    fn autocorrelation_finds_period() {
        let x: Vec<f64> = (0..500).map(|i| ((i % 50) < 5) as u8 as f64).collect();
        let r = autocorrelation(&x, 80);
        let best = (20..=80).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap();
        assert_eq!(best, 50);
    }
}
