//! GRU sequence-to-sequence autoencoder over thresholded mel spectrograms.
//!
//! Two stacked GRU layers encode the frame sequence; two more decode the
//! reversed sequence, starting from the encoder's final states. The feature
//! vector is `[enc1, enc2, dec1, dec2]` final hidden states.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::container::{Descriptor, ModelFile};
use crate::dsp::{mel_spectrogram, threshold_db, MelSpectrogram, Recording};
use crate::error::{PcgError, Result};
use crate::nn::{clip_global_norm, Adam, Dense, Gradients, GruCell, ParamStore, Tape, Var};

pub const HIDDEN: usize = 256;
pub const MEL_BANDS: usize = 126;
pub const MEL_WINDOW: f64 = 0.320;
pub const MEL_HOP: f64 = 0.160;
pub const CLIP_SECONDS: f64 = 30.0;
/// Thresholds in fusion order.
pub const THRESHOLDS_DB: [i32; 4] = [-30, -45, -60, -75];
const KIND: &str = "seq2seq";

/// Clamps at `floor_db` and rescales to [0, 1]; the autoencoder input.
pub fn prepare_spectrogram(spec: &MelSpectrogram, floor_db: f64) -> Result<Vec<Vec<f64>>> {
    Ok(threshold_db(spec, floor_db)?.unit_scaled())
}

/// Mel spectrogram of the first 30 s of a recording.
pub fn recording_spectrogram(rec: &Recording) -> Result<MelSpectrogram> {
    let keep = ((CLIP_SECONDS * rec.rate).round() as usize).min(rec.samples.len());
    let clipped = Recording::new(rec.samples[..keep].to_vec(), rec.rate)?;
    mel_spectrogram(&clipped, MEL_BANDS, MEL_WINDOW, MEL_HOP)
}

/// Keeps every `stride`-th frame.
pub fn subsample(frames: &[Vec<f64>], stride: usize) -> Vec<Vec<f64>> {
    frames.iter().step_by(stride.max(1)).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureTag {
    Threshold(i32),
    Fused,
}

impl fmt::Display for FeatureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureTag::Threshold(t) => write!(f, "{t}"),
            FeatureTag::Fused => f.write_str("fused"),
        }
    }
}

impl FromStr for FeatureTag {
    type Err = PcgError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "fused" {
            return Ok(FeatureTag::Fused);
        }
        let t: i32 = s
            .trim_end_matches("dB")
            .trim_end_matches("db")
            .parse()
            .map_err(|_| PcgError::Parameter(format!("bad feature tag `{s}`")))?;
        Ok(FeatureTag::Threshold(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlFeature {
    pub values: Vec<f64>,
    pub tag: FeatureTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub clip_norm: f64,
    /// Keep every n-th frame during training and extraction (1 = all).
    pub frame_stride: usize,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig {
            hidden: HIDDEN,
            epochs: 100,
            lr: 1e-3,
            clip_norm: 5.0,
            frame_stride: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2Seq {
    pub store: ParamStore,
    pub bands: usize,
    pub hidden: usize,
    pub threshold_db: i32,
    pub frame_stride: usize,
    pub seed: u64,
    enc: [GruCell; 2],
    dec: [GruCell; 2],
    out: Dense,
}

impl Seq2Seq {
    pub fn new(bands: usize, hidden: usize, threshold_db: i32, frame_stride: usize, seed: u64) -> Result<Self> {
        if bands == 0 || hidden == 0 {
            return Err(PcgError::Parameter("bands and hidden size must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let enc = [
            GruCell::new(&mut store, "enc1", bands, hidden, &mut rng)?,
            GruCell::new(&mut store, "enc2", hidden, hidden, &mut rng)?,
        ];
        let dec = [
            GruCell::new(&mut store, "dec1", bands, hidden, &mut rng)?,
            GruCell::new(&mut store, "dec2", hidden, hidden, &mut rng)?,
        ];
        let out = Dense::new(&mut store, "proj", hidden, bands, &mut rng)?;
        Ok(Seq2Seq {
            store,
            bands,
            hidden,
            threshold_db,
            frame_stride: frame_stride.max(1),
            seed,
            enc,
            dec,
            out,
        })
    }

    pub fn feature_dim(&self) -> usize {
        4 * self.hidden
    }

    fn check(&self, frames: &[Vec<f64>]) -> Result<()> {
        if frames.is_empty() {
            return Err(PcgError::InvalidInput("spectrogram has no frames".into()));
        }
        if let Some(f) = frames.iter().find(|f| f.len() != self.bands) {
            return Err(PcgError::Shape(format!(
                "frame has {} bands, model expects {}",
                f.len(),
                self.bands
            )));
        }
        Ok(())
    }

    fn encode(&self, tape: &mut Tape, frames: &[Vec<f64>]) -> Result<[Var; 2]> {
        let mut h1 = tape.input(vec![0.0; self.hidden], vec![self.hidden])?;
        let mut h2 = h1;
        for f in frames {
            let x = tape.input(f.clone(), vec![self.bands])?;
            h1 = self.enc[0].step(tape, x, h1)?;
            h2 = self.enc[1].step(tape, h1, h2)?;
        }
        Ok([h1, h2])
    }

    /// Teacher-forced reconstruction of the reversed sequence.
    fn reconstruct(&self, tape: &mut Tape, frames: &[Vec<f64>]) -> Result<Var> {
        let [mut d1, mut d2] = self.encode(tape, frames)?;
        let mut prev = vec![0.0; self.bands];
        let mut losses = Vec::with_capacity(frames.len());
        for target in frames.iter().rev() {
            let x = tape.input(prev, vec![self.bands])?;
            d1 = self.dec[0].step(tape, x, d1)?;
            d2 = self.dec[1].step(tape, d1, d2)?;
            let y = self.out.forward(tape, d2)?;
            losses.push(tape.mse(y, target.clone())?);
            prev = target.clone();
        }
        let sum = tape.sum(&losses)?;
        Ok(tape.scale(sum, 1.0 / frames.len() as f64))
    }

    /// Mean frame-wise squared error of the teacher-forced reconstruction.
    pub fn reconstruction_error(&self, frames: &[Vec<f64>]) -> Result<f64> {
        self.check(frames)?;
        let frames = subsample(frames, self.frame_stride);
        let mut tape = Tape::new(&self.store);
        let p = self.reconstruct(&mut tape, &frames)?;
        Ok(tape.scalar(p))
    }

    /// Final hidden states `[enc1, enc2, dec1, dec2]`; the decoder runs
    /// free on zero inputs for as many steps as there are frames.
    pub fn extract(&self, frames: &[Vec<f64>]) -> Result<RlFeature> {
        self.check(frames)?;
        let frames = subsample(frames, self.frame_stride);
        let mut tape = Tape::new(&self.store);
        let [e1, e2] = self.encode(&mut tape, &frames)?;
        let (mut d1, mut d2) = (e1, e2);
        let zero = tape.input(vec![0.0; self.bands], vec![self.bands])?;
        for _ in 0..frames.len() {
            d1 = self.dec[0].step(&mut tape, zero, d1)?;
            d2 = self.dec[1].step(&mut tape, d1, d2)?;
        }
        let all = tape.concat(&[e1, e2, d1, d2]);
        Ok(RlFeature {
            values: tape.value(all).to_vec(),
            tag: FeatureTag::Threshold(self.threshold_db),
        })
    }

    pub fn to_file(&self, epochs: usize, lr: f64) -> ModelFile {
        let mut d = Descriptor::new();
        d.set("kind", KIND)
            .set("bands", self.bands)
            .set("hidden", self.hidden)
            .set("threshold_db", self.threshold_db)
            .set("frame_stride", self.frame_stride)
            .set("seed", self.seed)
            .set("epochs", epochs)
            .set("lr", lr);
        ModelFile::new(d, self.store.clone())
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let d = &file.descriptor;
        if d.require("kind")? != KIND {
            return Err(PcgError::Parameter(format!("not an autoencoder model: kind={}", d.require("kind")?)));
        }
        let store = file.params;
        let enc = [GruCell::lookup(&store, "enc1")?, GruCell::lookup(&store, "enc2")?];
        let dec = [GruCell::lookup(&store, "dec1")?, GruCell::lookup(&store, "dec2")?];
        let out = Dense::lookup(&store, "proj")?;
        let bands: usize = d.parse("bands")?;
        let hidden: usize = d.parse("hidden")?;
        let ok = enc[0].inputs == bands
            && dec[0].inputs == bands
            && [enc[0], enc[1], dec[0], dec[1]].iter().all(|c| c.hidden == hidden)
            && enc[1].inputs == hidden
            && dec[1].inputs == hidden
            && out.inputs == hidden
            && out.outputs == bands;
        if !ok {
            return Err(PcgError::Shape("autoencoder parameter shapes disagree with descriptor".into()));
        }
        Ok(Seq2Seq {
            bands,
            hidden,
            threshold_db: d.parse("threshold_db")?,
            frame_stride: d.parse("frame_stride")?,
            seed: d.parse("seed")?,
            store,
            enc,
            dec,
            out,
        })
    }
}

/// Trains one model on spectrograms prepared at a single threshold.
/// Returns the model and the mean reconstruction loss of every epoch.
pub fn train_autoencoder(
    specs: &[Vec<Vec<f64>>],
    threshold_db: i32,
    cfg: &AeConfig,
) -> Result<(Seq2Seq, Vec<f64>)> {
    let Some(first) = specs.iter().find_map(|s| s.first()) else {
        return Err(PcgError::TrainingSetup("no spectrogram frames to train on".into()));
    };
    let bands = first.len();
    let mut model = Seq2Seq::new(bands, cfg.hidden, threshold_db, cfg.frame_stride, cfg.seed)?;
    let seqs: Vec<Vec<Vec<f64>>> = specs
        .iter()
        .map(|s| {
            model.check(s)?;
            Ok(subsample(s, cfg.frame_stride))
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut grads = Gradients::for_store(&model.store);
    let mut opt = Adam::new(cfg.lr);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            grads.clear();
            let mut tape = Tape::new(&model.store);
            let loss = model.reconstruct(&mut tape, &seqs[i])?;
            let l = tape.scalar(loss);
            if !l.is_finite() {
                return Err(PcgError::TrainingDiverged(format!(
                    "autoencoder loss became {l} at epoch {epoch}"
                )));
            }
            total += l;
            tape.backward(loss, &mut grads)?;
            drop(tape);
            clip_global_norm(&mut grads, cfg.clip_norm);
            opt.step(&mut model.store, &grads)?;
        }
        let mean = total / seqs.len() as f64;
        info!("autoencoder {threshold_db} dB epoch {epoch}: mse {mean:.6}");
        curve.push(mean);
    }
    Ok((model, curve))
}

/// Concatenates the four threshold features in the order -30, -45, -60, -75 dB.
pub fn fuse_features(parts: &[RlFeature]) -> Result<RlFeature> {
    if parts.len() != THRESHOLDS_DB.len() {
        return Err(PcgError::Shape(format!("fusion needs 4 features, got {}", parts.len())));
    }
    let dim = parts[0].values.len();
    let mut values = Vec::with_capacity(4 * dim);
    for (p, &t) in parts.iter().zip(&THRESHOLDS_DB) {
        if p.tag != FeatureTag::Threshold(t) {
            return Err(PcgError::Shape(format!("expected the {t} dB feature, got {}", p.tag)));
        }
        if p.values.len() != dim {
            return Err(PcgError::Shape("fused features differ in dimension".into()));
        }
        values.extend_from_slice(&p.values);
    }
    Ok(RlFeature {
        values,
        tag: FeatureTag::Fused,
    })
}

/// Per-dimension arithmetic mean.
pub fn feature_statistics(features: &[RlFeature]) -> Result<Vec<f64>> {
    let Some(first) = features.first() else {
        return Err(PcgError::Parameter("no features to average".into()));
    };
    let dim = first.values.len();
    let mut mean = vec![0.0; dim];
    for f in features {
        if f.values.len() != dim {
            return Err(PcgError::Shape("features differ in dimension".into()));
        }
        mean.iter_mut().zip(&f.values).for_each(|(m, v)| *m += v);
    }
    let n = features.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// `filename,threshold,dim0..dimN`.
pub fn write_features_csv(path: &Path, rows: &[(String, RlFeature)]) -> Result<()> {
    let io = |e| PcgError::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let dim = rows.first().map_or(0, |(_, f)| f.values.len());
    let header: Vec<String> = (0..dim).map(|i| format!("dim{i}")).collect();
    writeln!(w, "filename,threshold,{}", header.join(",")).map_err(io)?;
    for (name, f) in rows {
        if f.values.len() != dim {
            return Err(PcgError::Shape("feature rows differ in dimension".into()));
        }
        let vals: Vec<String> = f.values.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{name},{},{}", f.tag, vals.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `dimension,mean` CSV for plotting.
pub fn write_statistics_csv(path: &Path, mean: &[f64]) -> Result<()> {
    let io = |e| PcgError::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "dimension,mean").map_err(io)?;
    for (i, m) in mean.iter().enumerate() {
        writeln!(w, "{i},{m}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(v: f64, t: i32) -> RlFeature {
        RlFeature {
            values: vec![v; 3],
            tag: FeatureTag::Threshold(t),
        }
    }

    #[test]
    fn fusion_order_is_fixed() {
        let parts: Vec<RlFeature> = THRESHOLDS_DB.iter().enumerate().map(|(i, &t)| feat(i as f64, t)).collect();
        let f = fuse_features(&parts).unwrap();
        assert_eq!(f.values, vec![0., 0., 0., 1., 1., 1., 2., 2., 2., 3., 3., 3.]);
        assert_eq!(f.tag, FeatureTag::Fused);
        let mut swapped = parts.clone();
        swapped.swap(0, 1);
        assert!(fuse_features(&swapped).is_err());
        assert!(fuse_features(&parts[..3]).is_err());
    }

    #[test]
    fn statistics() {
        let v = RlFeature {
            values: vec![1.0, -2.0, 3.5],
            tag: FeatureTag::Fused,
        };
        assert_eq!(feature_statistics(&[v.clone()]).unwrap(), v.values);
        let neg = RlFeature {
            values: v.values.iter().map(|x| -x).collect(),
            ..v.clone()
        };
        assert!(feature_statistics(&[v, neg]).unwrap().iter().all(|&m| m == 0.0));
        assert!(matches!(feature_statistics(&[]), Err(PcgError::Parameter(_))));
    }

    #[test]
    fn band_mismatch_rejected() {
        let m = Seq2Seq::new(5, 4, -60, 1, 0).unwrap();
        assert!(matches!(m.extract(&[vec![0.0; 6]]), Err(PcgError::Shape(_))));
    }

    #[test]
    fn extraction_is_deterministic_and_sized() {
        let m = Seq2Seq::new(6, 8, -60, 1, 1).unwrap();
        let a: Vec<Vec<f64>> = (0..5).map(|t| (0..6).map(|b| ((t * b) as f64).sin().abs()).collect()).collect();
        let mut b = a.clone();
        b[2][3] += 0.3;
        let fa = m.extract(&a).unwrap();
        assert_eq!(fa.values.len(), 32);
        assert_eq!(fa, m.extract(&a).unwrap());
        assert_ne!(fa.values, m.extract(&b).unwrap().values);
    }

    #[test]
    fn constant_frames_reconstruct_almost_perfectly() {
        let spec = vec![vec![0.25, 0.5, 0.75, 0.5]; 6];
        let cfg = AeConfig {
            hidden: 6,
            epochs: 300,
            lr: 0.01,
            frame_stride: 1,
            ..AeConfig::default()
        };
        let (m, curve) = train_autoencoder(&[spec.clone()], -60, &cfg).unwrap();
        assert!(curve.iter().all(|l| l.is_finite()));
        assert!(m.reconstruction_error(&spec).unwrap() < 1e-3, "{:?}", curve.last());
    }

    #[test]
    fn model_file_round_trip() {
        let m = Seq2Seq::new(5, 4, -45, 2, 3).unwrap();
        let back = Seq2Seq::from_file(ModelFile::decode(&m.to_file(0, 0.1).encode()).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
