use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::check_training;
use super::linear::{argmax, Standardizer};
use crate::container::{Descriptor, ModelFile};
use crate::error::{PcgError, Result};
use crate::nn::{class_weights, softmax, Adam, Dense, Gradients, ParamStore, Tape, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub class_weighted: bool,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64],
            epochs: 100,
            lr: 1e-3,
            batch_size: 16,
            class_weighted: true,
            seed: 0,
        }
    }
}

/// ReLU MLP with a softmax output on z-scored input.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub store: ParamStore,
    pub scaler: Standardizer,
    layers: Vec<Dense>,
}

impl MlpModel {
    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn dim(&self) -> usize {
        self.scaler.mean.len()
    }

    fn logits(&self, tape: &mut Tape, z: Vec<f64>) -> Result<crate::nn::Var> {
        let n = z.len();
        let mut h = tape.input(z, vec![n])?;
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            h = l.forward(tape, h)?;
            if i < last {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    /// Class and softmax posterior.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let z = self.scaler.apply(x)?;
        let mut tape = Tape::new(&self.store);
        let l = self.logits(&mut tape, z)?;
        let p = softmax(tape.value(l));
        Ok((argmax(&p), p))
    }

    pub fn to_file(&self) -> ModelFile {
        let mut store = self.store.clone();
        let d = self.dim();
        store
            .add("scaler.mean", Tensor::new(self.scaler.mean.clone(), vec![d]).unwrap())
            .unwrap();
        store
            .add("scaler.std", Tensor::new(self.scaler.std.clone(), vec![d]).unwrap())
            .unwrap();
        let mut desc = Descriptor::new();
        desc.set("kind", "mlp").set("layers", self.layers.len());
        ModelFile::new(desc, store)
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let n: usize = file.descriptor.parse("layers")?;
        let get = |name: &str| {
            file.params
                .by_name(name)
                .map(|p| p.value.data.clone())
                .ok_or_else(|| PcgError::Parameter(format!("mlp lacks `{name}`")))
        };
        let scaler = Standardizer {
            mean: get("scaler.mean")?,
            std: get("scaler.std")?,
        };
        let mut store = ParamStore::new();
        for (_, p) in file.params.iter().filter(|(_, p)| !p.name.starts_with("scaler.")) {
            store.add(p.name.clone(), p.value.clone())?;
        }
        let layers = (0..n)
            .map(|i| Dense::lookup(&store, &format!("layer{i}")))
            .collect::<Result<Vec<_>>>()?;
        let mut fan_in = scaler.mean.len();
        for l in &layers {
            if l.inputs != fan_in {
                return Err(PcgError::Shape("mlp layer widths do not chain".into()));
            }
            fan_in = l.outputs;
        }
        Ok(MlpModel { store, scaler, layers })
    }
}

pub fn train_mlp(x: &[Vec<f64>], y: &[usize], classes: usize, cfg: &MlpConfig) -> Result<MlpModel> {
    let (n, d) = check_training(x, y, classes)?;
    if cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(PcgError::TrainingSetup("batch size and learning rate must be positive".into()));
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.apply_all(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = ParamStore::new();
    let mut layers = Vec::new();
    let mut fan_in = d;
    for (i, &w) in cfg.hidden.iter().chain(std::iter::once(&classes)).enumerate() {
        layers.push(Dense::new(&mut store, &format!("layer{i}"), fan_in, w, &mut rng)?);
        fan_in = w;
    }
    let mut model = MlpModel { store, scaler, layers };
    let mut counts = vec![0usize; classes];
    y.iter().for_each(|&c| counts[c] += 1);
    let weights = if cfg.class_weighted {
        class_weights(&counts)
    } else {
        vec![1.0; classes]
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = Gradients::for_store(&model.store);
    let mut opt = Adam::new(cfg.lr);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            for &i in batch {
                let mut tape = Tape::new(&model.store);
                let l = model.logits(&mut tape, z[i].clone())?;
                let loss = tape.softmax_cross_entropy(l, y[i], weights[y[i]])?;
                if !tape.scalar(loss).is_finite() {
                    return Err(PcgError::TrainingDiverged(format!("mlp loss non-finite at epoch {epoch}")));
                }
                tape.backward_scaled(loss, 1.0 / batch.len() as f64, &mut grads)?;
            }
            opt.step(&mut model.store, &grads)?;
        }
    }
    Ok(model)
}
