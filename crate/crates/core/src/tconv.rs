//! Learnable FIR front-end: each layer is a single-channel `same` convolution
//! whose kernel acts as an FIR filter delayed by N/2 samples.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::FirFilter;
use crate::error::{PcgError, Result};
use crate::nn::{he_uniform, ParamId, ParamStore, Padding, Tape, Tensor, Var};

pub const DEFAULT_KERNEL_LEN: usize = 61;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Free,
    LinearPhase,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Free => "free",
            Variant::LinearPhase => "lp",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = PcgError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "free" => Ok(Variant::Free),
            "lp" | "linear-phase" | "linear_phase" => Ok(Variant::LinearPhase),
            _ => Err(PcgError::Parameter(format!("unknown tconv variant `{s}`"))),
        }
    }
}

/// One tConv layer. For the linear-phase variant `kernel` holds only the
/// first N/2+1 taps; the full kernel is rebuilt by mirroring on every pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TConvLayer {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub len: usize,
    pub activation: Activation,
    pub variant: Variant,
}

fn param_names(name: &str, variant: Variant) -> (String, String) {
    let k = match variant {
        Variant::Free => format!("{name}.kernel"),
        Variant::LinearPhase => format!("{name}.half"),
    };
    (k, format!("{name}.beta"))
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 || len % 2 == 0 {
        return Err(PcgError::Parameter(format!("tconv kernel length must be odd, got {len}")));
    }
    Ok(())
}

impl TConvLayer {
    /// Randomly initialised layer (He-uniform over the kernel taps).
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        len: usize,
        variant: Variant,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        check_len(len)?;
        let stored = match variant {
            Variant::Free => len,
            Variant::LinearPhase => len / 2 + 1,
        };
        let (kn, bn) = param_names(name, variant);
        let kernel = store.add(kn, he_uniform(rng, vec![stored], len))?;
        let bias = store.add(bn, Tensor::zeros(vec![1]))?;
        Ok(TConvLayer {
            kernel,
            bias,
            len,
            activation,
            variant,
        })
    }

    /// Layer initialised to given taps. The linear-phase variant requires
    /// exactly symmetric taps.
    pub fn from_taps(
        store: &mut ParamStore,
        name: &str,
        taps: &[f64],
        variant: Variant,
        activation: Activation,
    ) -> Result<Self> {
        let len = taps.len();
        check_len(len)?;
        let stored = match variant {
            Variant::Free => taps.to_vec(),
            Variant::LinearPhase => {
                if (0..len).any(|i| taps[i] != taps[len - 1 - i]) {
                    return Err(PcgError::Parameter(format!(
                        "{name}: linear-phase init needs symmetric taps"
                    )));
                }
                taps[..len / 2 + 1].to_vec()
            }
        };
        let (kn, bn) = param_names(name, variant);
        let n = stored.len();
        let kernel = store.add(kn, Tensor::new(stored, vec![n])?)?;
        let bias = store.add(bn, Tensor::zeros(vec![1]))?;
        Ok(TConvLayer {
            kernel,
            bias,
            len,
            activation,
            variant,
        })
    }

    pub fn lookup(store: &ParamStore, name: &str, activation: Activation) -> Result<Self> {
        let bias = crate::nn::lookup(store, &format!("{name}.beta"))?;
        let (kernel, variant) = if let Some(id) = store.id(&format!("{name}.kernel")) {
            (id, Variant::Free)
        } else if let Some(id) = store.id(&format!("{name}.half")) {
            (id, Variant::LinearPhase)
        } else {
            return Err(PcgError::Parameter(format!("missing tconv kernel for `{name}`")));
        };
        let stored = store.get(kernel).value.len();
        let len = match variant {
            Variant::Free => stored,
            Variant::LinearPhase => 2 * stored - 1,
        };
        check_len(len)?;
        Ok(TConvLayer {
            kernel,
            bias,
            len,
            activation,
            variant,
        })
    }

    pub fn kernel_var(&self, tape: &mut Tape) -> Var {
        let k = tape.param(self.kernel);
        match self.variant {
            Variant::Free => k,
            Variant::LinearPhase => tape.mirror(k),
        }
    }

    /// y[n] = act(beta + sum_i b_i x[n + N/2 - i]), zero padded, same length.
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let k = self.kernel_var(tape);
        let b = tape.param(self.bias);
        let y = tape.conv1d(x, k, Some(b), Padding::Same)?;
        Ok(match self.activation {
            Activation::Linear => y,
            Activation::Relu => tape.relu(y),
        })
    }

    /// Current full kernel b_0..b_N.
    pub fn full_kernel(&self, store: &ParamStore) -> Vec<f64> {
        let k = &store.get(self.kernel).value.data;
        match self.variant {
            Variant::Free => k.clone(),
            Variant::LinearPhase => lp_constrain(k),
        }
    }

    pub fn delay(&self) -> usize {
        self.len / 2
    }

    pub fn params(&self) -> [ParamId; 2] {
        [self.kernel, self.bias]
    }
}

/// Mirrors a half kernel of length N/2+1 into the symmetric kernel of length N+1.
pub fn lp_constrain(half: &[f64]) -> Vec<f64> {
    if half.is_empty() {
        return Vec::new();
    }
    let n = 2 * half.len() - 1;
    (0..n).map(|i| half[i.min(n - 1 - i)]).collect()
}

/// Inference-only forward pass on a plain sequence.
pub fn tconv_forward(store: &ParamStore, layer: &TConvLayer, x: &[f64]) -> Result<Vec<f64>> {
    let mut tape = Tape::new(store);
    let xv = tape.input(x.to_vec(), vec![1, x.len()])?;
    let y = layer.forward(&mut tape, xv)?;
    Ok(tape.value(y).to_vec())
}

/// One trainable layer per design, named `{prefix}{i}`, kernels copied from the designs.
pub fn init_from_filterbank(
    store: &mut ParamStore,
    prefix: &str,
    designs: &[FirFilter],
    variant: Variant,
) -> Result<Vec<TConvLayer>> {
    let Some(first) = designs.first() else {
        return Err(PcgError::Parameter("empty filterbank".into()));
    };
    let len = first.coefficients().len();
    if designs.iter().any(|d| d.coefficients().len() != len) {
        return Err(PcgError::Parameter("filterbank designs differ in length".into()));
    }
    designs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            TConvLayer::from_taps(store, &format!("{prefix}{i}"), d.coefficients(), variant, Activation::Linear)
        })
        .collect()
}

/// Group delay in samples at `n_fft/2 + 1` bins from 0 to Nyquist, via
/// tau = Re(DFT(n h[n]) / DFT(h)). Bins with |H| below `min_mag` are `None`.
pub fn group_delay(taps: &[f64], n_fft: usize, min_mag: f64) -> Vec<Option<f64>> {
    let n_fft = n_fft.max(taps.len());
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    let mut h: Vec<Complex64> = (0..n_fft)
        .map(|i| Complex64::new(taps.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    let mut nh: Vec<Complex64> = (0..n_fft)
        .map(|i| Complex64::new(i as f64 * taps.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    fft.process(&mut h);
    fft.process(&mut nh);
    (0..=n_fft / 2)
        .map(|k| (h[k].norm() > min_mag).then(|| (nh[k] / h[k]).re))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    pub frequency: f64,
    pub magnitude_db: f64,
    pub phase: f64,
}

/// Frequency response on `points` evenly spaced frequencies from 0 to Nyquist.
pub fn filter_analysis(taps: &[f64], rate: f64, points: usize) -> Vec<ResponsePoint> {
    let points = points.max(2);
    (0..points)
        .map(|k| {
            let f = rate / 2.0 * k as f64 / (points - 1) as f64;
            let h = crate::dsp::frequency_response(taps, f, rate);
            ResponsePoint {
                frequency: f,
                magnitude_db: 20.0 * h.norm().max(1e-300).log10(),
                phase: h.arg(),
            }
        })
        .collect()
}

/// CSV with columns `kernel,frequency_hz,magnitude_db,phase_rad`.
pub fn write_filter_analysis(path: &Path, kernels: &[(String, Vec<f64>)], rate: f64, points: usize) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| PcgError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| PcgError::io(path, e);
    writeln!(w, "kernel,frequency_hz,magnitude_db,phase_rad").map_err(io)?;
    for (name, taps) in kernels {
        for p in filter_analysis(taps, rate, points) {
            writeln!(w, "{name},{},{},{}", p.frequency, p.magnitude_db, p.phase).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::dsp::fir_apply;
    use crate::pipeline::band_filters;

    #[test]
    fn centered_delta_is_identity() {
        let mut store = ParamStore::new();
        let mut taps = vec![0.0; 7];
        taps[3] = 1.0;
        let layer = TConvLayer::from_taps(&mut store, "t", &taps, Variant::Free, Activation::Linear).unwrap();
        let x = vec![0.3, -1.0, 2.0, 4.0, 0.0, 1.5, -2.5, 0.7];
        assert_eq!(tconv_forward(&store, &layer, &x).unwrap(), x);
    }

    #[test]
    fn moving_average_of_constant() {
        let mut store = ParamStore::new();
        let layer = TConvLayer::from_taps(&mut store, "t", &[0.2; 5], Variant::Free, Activation::Linear).unwrap();
        let y = tconv_forward(&store, &layer, &[1.0; 20]).unwrap();
        for v in &y[2..18] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delayed_output_is_causal_fir() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let layer = TConvLayer::new(&mut store, "t", 9, Variant::Free, Activation::Linear, &mut rng).unwrap();
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = tconv_forward(&store, &layer, &x).unwrap();
        let fir = fir_apply(&FirFilter::new(layer.full_kernel(&store)).unwrap(), &x);
        let half = layer.delay();
        for n in 8..50 {
            assert!((y[n - half] - fir[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_construction() {
        assert_eq!(lp_constrain(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn filterbank_init() {
        let designs = band_filters(60).unwrap();
        for variant in [Variant::Free, Variant::LinearPhase] {
            let mut store = ParamStore::new();
            let layers = init_from_filterbank(&mut store, "fe", &designs, variant).unwrap();
            assert_eq!(layers.len(), 4);
            for (l, d) in layers.iter().zip(&designs) {
                assert_eq!(l.full_kernel(&store), d.coefficients());
                assert!(store.get(l.kernel).trainable);
            }
        }
    }

    #[test]
    fn mismatched_designs_rejected() {
        let designs = vec![FirFilter::new(vec![1.0; 5]).unwrap(), FirFilter::new(vec![1.0; 7]).unwrap()];
        let mut store = ParamStore::new();
        assert!(matches!(
            init_from_filterbank(&mut store, "fe", &designs, Variant::Free),
            Err(PcgError::Parameter(_))
        ));
    }

    #[test]
    fn even_length_rejected() {
        let mut store = ParamStore::new();
        let r = TConvLayer::from_taps(&mut store, "t", &[1.0; 4], Variant::Free, Activation::Linear);
        assert!(r.is_err());
    }

    #[test]
    fn symmetric_group_delay_is_half_order() {
        let taps = lp_constrain(&[0.1, -0.3, 0.5, 0.9]);
        for tau in group_delay(&taps, 1024, 1e-3).into_iter().flatten() {
            assert!((tau - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn analysis_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_filter_analysis(&path, &[("b0".into(), vec![0.5, 0.5])], 1000.0, 11).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "kernel,frequency_hz,magnitude_db,phase_rad");
        assert_eq!(lines.len(), 12);
        assert!(lines[1].starts_with("b0,0,"));
    }
}
