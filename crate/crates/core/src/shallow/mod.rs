//! Linear SVM, shrinkage LDA and a small MLP over fixed-length feature vectors.

mod lda;
mod linear;
mod mlp;
mod svm;

pub use lda::train_lda;
pub use linear::{argmax, ClassifierKind, LinearModel, Standardizer};
pub use mlp::{train_mlp, MlpConfig, MlpModel};
pub use svm::{train_svm, SvmConfig, SvmReport};

use crate::container::ModelFile;
use crate::error::{PcgError, Result};

pub const DEFAULT_C: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 0.3;
pub const DEFAULT_SHRINKAGE: f64 = 0.1;

/// Any trained shallow classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl Classifier {
    pub fn classes(&self) -> usize {
        match self {
            Classifier::Linear(m) => m.classes(),
            Classifier::Mlp(m) => m.classes(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Classifier::Linear(m) => m.dim(),
            Classifier::Mlp(m) => m.dim(),
        }
    }

    /// Predicted class and one score per class.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        match self {
            Classifier::Linear(m) => m.predict(x),
            Classifier::Mlp(m) => m.predict(x),
        }
    }

    pub fn to_file(&self) -> ModelFile {
        match self {
            Classifier::Linear(m) => m.to_file(),
            Classifier::Mlp(m) => m.to_file(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        match file.descriptor.require("kind")? {
            "mlp" => Ok(Classifier::Mlp(MlpModel::from_file(file)?)),
            "linear" => Ok(Classifier::Linear(LinearModel::from_file(file)?)),
            k => Err(PcgError::Parameter(format!("not a shallow classifier: kind={k}"))),
        }
    }
}

/// Checks a labelled matrix and returns (rows, dim, classes present).
pub(crate) fn check_training(x: &[Vec<f64>], y: &[usize], classes: usize) -> Result<(usize, usize)> {
    if x.len() != y.len() {
        return Err(PcgError::InvalidInput(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let Some(first) = x.first() else {
        return Err(PcgError::TrainingSetup("no training rows".into()));
    };
    let d = first.len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(PcgError::Shape("training rows must share a positive dimension".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(PcgError::InvalidInput("non-finite feature value".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
        return Err(PcgError::InvalidInput(format!("label {bad} out of range for {classes} classes")));
    }
    let mut seen = vec![false; classes];
    y.iter().for_each(|&c| seen[c] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(PcgError::TrainingSetup("need at least two classes in the training data".into()));
    }
    Ok((x.len(), d))
}
