use crate::container::{Descriptor, ModelFile};
use crate::error::{PcgError, Result};
use crate::nn::{ParamStore, Tensor};

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-column z-scoring fitted on training rows; constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, |r| r.len());
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in x {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in x {
            var.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2));
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(PcgError::Shape(format!(
                "feature vector has {} values, model expects {}",
                x.len(),
                self.mean.len()
            )));
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn apply_all(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.apply(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Svm,
    Lda,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Lda => "lda",
        }
    }
}

/// Scores s_k = w_k . z + b_k on standardized input z.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ClassifierKind,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub scaler: Standardizer,
}

impl LinearModel {
    pub fn classes(&self) -> usize {
        self.biases.len()
    }

    pub fn dim(&self) -> usize {
        self.scaler.mean.len()
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.scaler.apply(x)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(&z).map(|(a, c)| a * c).sum::<f64>() + b)
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let s = self.scores(x)?;
        Ok((argmax(&s), s))
    }

    pub fn to_file(&self) -> ModelFile {
        let (k, d) = (self.classes(), self.dim());
        let mut store = ParamStore::new();
        let flat: Vec<f64> = self.weights.iter().flatten().copied().collect();
        let add = |store: &mut ParamStore, name: &str, data: Vec<f64>, shape: Vec<usize>| {
            store.add(name, Tensor::new(data, shape).expect("consistent shapes")).expect("unique names");
        };
        add(&mut store, "weights", flat, vec![k, d]);
        add(&mut store, "biases", self.biases.clone(), vec![k]);
        add(&mut store, "mean", self.scaler.mean.clone(), vec![d]);
        add(&mut store, "std", self.scaler.std.clone(), vec![d]);
        let mut desc = Descriptor::new();
        desc.set("kind", "linear").set("method", self.kind.as_str()).set("classes", k);
        ModelFile::new(desc, store)
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let d = &file.descriptor;
        let kind = match d.require("method")? {
            "svm" => ClassifierKind::Svm,
            "lda" => ClassifierKind::Lda,
            m => return Err(PcgError::Parameter(format!("unknown linear method `{m}`"))),
        };
        let get = |name: &str| {
            file.params
                .by_name(name)
                .ok_or_else(|| PcgError::Parameter(format!("linear model lacks `{name}`")))
        };
        let w = get("weights")?;
        let [k, dim] = w.value.shape[..] else {
            return Err(PcgError::Shape("weights must be 2-D".into()));
        };
        let biases = get("biases")?.value.data.clone();
        let mean = get("mean")?.value.data.clone();
        let std = get("std")?.value.data.clone();
        if biases.len() != k || mean.len() != dim || std.len() != dim {
            return Err(PcgError::Shape("linear model arrays disagree in size".into()));
        }
        Ok(LinearModel {
            kind,
            weights: w.value.data.chunks(dim.max(1)).map(|c| c.to_vec()).collect(),
            biases,
            scaler: Standardizer { mean, std },
        })
    }
}
