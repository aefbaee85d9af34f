//! Python bindings for a small slice of the toolkit.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use pcgkit::corpus::synth::{synth_pcg, Murmur, SynthConfig};
use pcgkit::dsp::{self, Recording};
use pcgkit::eval::{self, VoterOutput};
use pcgkit::pcgnet::{predict_recording, BranchCnn};
use pcgkit::pipeline::Preprocessor;
use pcgkit::segmentation::segment_detailed;
use pcgkit::{Label, PcgError};

fn py_err(e: PcgError) -> PyErr {
    match e {
        PcgError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn recording(samples: Vec<f64>, rate: f64) -> PyResult<Recording> {
    Recording::new(samples, rate).map_err(py_err)
}

/// Window-method band-pass taps.
#[pyfunction]
fn design_bandpass(low: f64, high: f64, rate: f64, order: usize) -> PyResult<Vec<f64>> {
    Ok(dsp::design_bandpass(low, high, rate, order).map_err(py_err)?.coefficients().to_vec())
}

/// Causal FIR filtering with zero initial state.
#[pyfunction]
fn fir_apply(taps: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let f = dsp::FirFilter::new(taps).map_err(py_err)?;
    Ok(dsp::fir_apply(&f, &x))
}

#[pyfunction]
fn resample(samples: Vec<f64>, rate: f64, target_rate: f64) -> PyResult<Vec<f64>> {
    Ok(dsp::resample(&recording(samples, rate)?, target_rate).map_err(py_err)?.samples)
}

/// Synthetic recording: (samples, rate, per-sample states, label).
#[pyfunction]
#[pyo3(signature = (bpm=60.0, murmur="none", snr_db=30.0, duration=10.0, rate=4000.0, seed=0))]
fn synthesize(
    bpm: f64,
    murmur: &str,
    snr_db: f64,
    duration: f64,
    rate: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, f64, Vec<String>, String)> {
    let label: Label = murmur.parse().or_else(|_| match murmur {
        "none" => Ok(Label::Normal),
        _ => Err(PyValueError::new_err(format!("unknown murmur `{murmur}`"))),
    })?;
    let cfg = SynthConfig { bpm, murmur: Murmur::for_label(label), snr_db, duration, rate, seed, ..SynthConfig::default() };
    let s = synth_pcg(&cfg).map_err(py_err)?;
    let states = s.states.labels.iter().map(|h| h.as_str().to_string()).collect();
    Ok((s.recording.samples, s.recording.rate, states, s.label.as_str().to_string()))
}

/// Conditions and segments a recording; returns (states at model rate, heart rate, model rate).
#[pyfunction]
fn segment(samples: Vec<f64>, rate: f64) -> PyResult<(Vec<String>, f64, f64)> {
    let pre = Preprocessor::default();
    let conditioned = pre.condition(&recording(samples, rate)?).map_err(py_err)?;
    let seg = segment_detailed(&conditioned, &pre.segment).map_err(py_err)?;
    let states = seg.states.labels.iter().map(|h| h.as_str().to_string()).collect();
    Ok((states, seg.heart_rate_bpm, seg.states.rate))
}

/// Acoustic functionals as (names, values).
#[pyfunction]
fn acoustic_features(samples: Vec<f64>, rate: f64) -> PyResult<(Vec<String>, Vec<f64>)> {
    let f = pcgkit::acoustic::extract_features(&recording(samples, rate)?).map_err(py_err)?;
    Ok((f.names, f.values))
}

/// (uar, accuracy, per-class recalls) for integer class indices.
#[pyfunction]
fn evaluate(predicted: Vec<usize>, truth: Vec<usize>, names: Vec<String>) -> PyResult<(f64, f64, Vec<f64>)> {
    let ev = eval::evaluate(&predicted, &truth, &names).map_err(py_err)?;
    Ok((ev.uar, ev.accuracy, ev.recalls))
}

#[pyfunction]
fn majority_vote(votes: Vec<usize>, k: usize) -> PyResult<usize> {
    let votes: Vec<VoterOutput> = votes.iter().enumerate().map(|(i, &c)| VoterOutput::hard(format!("v{i}"), c)).collect();
    eval::majority_vote(&votes, k).map_err(py_err)
}

/// A saved branch CNN.
#[pyclass]
struct Model {
    inner: BranchCnn,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model { inner: BranchCnn::load(&path).map_err(py_err)? })
    }

    #[getter]
    fn classes(&self) -> PyResult<Vec<&'static str>> {
        Ok(self.inner.arch.label_set().map_err(py_err)?.names())
    }

    /// (label, mean posterior over the recording's cycles).
    fn predict(&self, samples: Vec<f64>, rate: f64) -> PyResult<(String, Vec<f64>)> {
        let cycles = Preprocessor::default().cycles(&recording(samples, rate)?).map_err(py_err)?;
        let p = predict_recording(&self.inner, &cycles).map_err(py_err)?;
        let set = self.inner.arch.label_set().map_err(py_err)?;
        Ok((set.label(p.class).as_str().to_string(), p.posterior))
    }
}

#[pymodule(name = "pcgkit")]
fn pcgkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(design_bandpass, m)?)?;
    m.add_function(wrap_pyfunction!(fir_apply, m)?)?;
    m.add_function(wrap_pyfunction!(resample, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(acoustic_features, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(majority_vote, m)?)?;
    m.add_class::<Model>()?;
    Ok(())
}
