use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{PcgError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coefficients: Vec<f64>,
}

impl FirFilter {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(PcgError::Parameter("FIR filter needs at least one tap".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(PcgError::Parameter("FIR coefficients must be finite".into()));
        }
        Ok(FirFilter { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Filter order N; the filter has N + 1 taps.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        fir_apply(self, x)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed linear-phase band-pass design.
///
/// The taps are computed for the first half and mirrored, so the result is
/// exactly symmetric. Gain is normalized to unity at the band center. A high
/// edge at Nyquist yields a high-pass response.
pub fn design_bandpass(low: f64, high: f64, rate: f64, order: usize) -> Result<FirFilter> {
    if !(rate > 0.0) || !(low > 0.0) || !(low < high) || high > rate / 2.0 {
        return Err(PcgError::Parameter(format!(
            "band edges must satisfy 0 < low < high <= rate/2 (got {low}..{high} Hz at {rate} Hz)"
        )));
    }
    if order % 2 != 0 {
        return Err(PcgError::Parameter(format!("order must be even, got {order}")));
    }
    let f1 = low / rate;
    let f2 = high / rate;
    let half = order / 2;
    let mut taps = vec![0.0; order + 1];
    for n in 0..=half {
        let m = n as f64 - half as f64;
        let window = if order == 0 {
            1.0
        } else {
            0.54 - 0.46 * (2.0 * PI * n as f64 / order as f64).cos()
        };
        let ideal = 2.0 * f2 * sinc(2.0 * f2 * m) - 2.0 * f1 * sinc(2.0 * f1 * m);
        taps[n] = window * ideal;
        taps[order - n] = taps[n];
    }
    let center = 0.5 * (low + high);
    let gain = frequency_response(&taps, center, rate).norm();
    if gain <= f64::EPSILON {
        return Err(PcgError::Parameter(format!(
            "band {low}..{high} Hz has no gain at order {order}"
        )));
    }
    for t in &mut taps {
        *t /= gain;
    }
    FirFilter::new(taps)
}

/// Causal filtering with zero extension before the first sample.
pub fn fir_apply(filter: &FirFilter, x: &[f64]) -> Vec<f64> {
    let b = filter.coefficients();
    let mut y = vec![0.0; x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        let taps = b.len().min(n + 1);
        let mut acc = 0.0;
        for (i, &bi) in b[..taps].iter().enumerate() {
            acc += bi * x[n - i];
        }
        *out = acc;
    }
    y
}

/// H(f) = sum_k b_k e^{-j 2 pi f k / rate}, by direct summation.
pub fn frequency_response(taps: &[f64], freq: f64, rate: f64) -> Complex64 {
    let w = 2.0 * PI * freq / rate;
    taps.iter()
        .enumerate()
        .map(|(k, &b)| Complex64::from_polar(b, -w * k as f64))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    #[test]
    fn step_response() {
        let f = FirFilter::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(fir_apply(&f, &[1.0, 1.0, 1.0, 1.0]), vec![0.5, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn unit_filter_is_identity() {
        let f = FirFilter::new(vec![1.0]).unwrap();
        let x = vec![0.3, -1.0, 2.5, 7.0];
        assert_eq!(fir_apply(&f, &x), x);
    }

    #[test]
    fn matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b: Vec<f64> = (0..17).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = FirFilter::new(b.clone()).unwrap();
        let y = fir_apply(&f, &x);
        for n in 0..x.len() {
            let mut want = 0.0;
            for i in 0..b.len() {
                if n >= i {
                    want += b[i] * x[n - i];
                }
            }
            assert!((y[n] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_band_passes_center_and_rejects_low() {
        let f = design_bandpass(25.0, 45.0, 1000.0, 60).unwrap();
        let h = f.coefficients();
        // direct DTFT sums, independent of frequency_response
        let dtft = |freq: f64| {
            let w = 2.0 * PI * freq / 1000.0;
            let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, &b)| {
                (re + b * (w * k as f64).cos(), im - b * (w * k as f64).sin())
            });
            (re * re + im * im).sqrt()
        };
        assert!(db(dtft(35.0)) >= -3.0);
        assert!(db(dtft(5.0)) <= -20.0);
    }

    #[test]
    fn designs_are_exactly_symmetric() {
        for (lo, hi) in [(25.0, 45.0), (45.0, 80.0), (80.0, 200.0), (200.0, 500.0)] {
            let f = design_bandpass(lo, hi, 1000.0, 60).unwrap();
            let b = f.coefficients();
            let n = f.order();
            for i in 0..=n {
                assert_eq!(b[i].to_bits(), b[n - i].to_bits());
            }
        }
    }

    #[test]
    fn nyquist_edge_acts_high_pass() {
        let f = design_bandpass(200.0, 500.0, 1000.0, 60).unwrap();
        let h = f.coefficients();
        let mag = |freq| frequency_response(h, freq, 1000.0).norm();
        assert!(db(mag(350.0)) > -1.0);
        assert!(db(mag(450.0)) > -3.0);
        assert!(db(mag(50.0)) < -40.0);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(design_bandpass(45.0, 25.0, 1000.0, 60).is_err());
        assert!(design_bandpass(0.0, 25.0, 1000.0, 60).is_err());
        assert!(design_bandpass(25.0, 600.0, 1000.0, 60).is_err());
        assert!(design_bandpass(25.0, 45.0, 1000.0, 61).is_err());
    }
}
