use nalgebra::{DMatrix, DVector};

use super::check_training;
use super::linear::{ClassifierKind, LinearModel, Standardizer};
use crate::error::{PcgError, Result};

/// Linear discriminants with pooled covariance shrunk towards its diagonal:
/// S = (1 - l) S + l diag(S). Scores are the Gaussian log-discriminants
/// w_k = S^-1 m_k, b_k = -m_k' S^-1 m_k / 2 + ln p_k.
pub fn train_lda(x: &[Vec<f64>], y: &[usize], classes: usize, shrinkage: f64) -> Result<LinearModel> {
    let (n, d) = check_training(x, y, classes)?;
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(PcgError::Parameter(format!("shrinkage must be in [0, 1], got {shrinkage}")));
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.apply_all(x)?;
    let mut counts = vec![0usize; classes];
    let mut means = vec![vec![0.0; d]; classes];
    for (r, &c) in z.iter().zip(y) {
        counts[c] += 1;
        means[c].iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        if c > 0 {
            m.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    let dof = n.saturating_sub(present).max(1) as f64;
    let mut centered = DMatrix::<f64>::zeros(n, d);
    for (i, (r, &c)) in z.iter().zip(y).enumerate() {
        for j in 0..d {
            centered[(i, j)] = r[j] - means[c][j];
        }
    }
    let mut sigma = centered.transpose() * &centered / dof;
    for i in 0..d {
        let diag = sigma[(i, i)];
        for j in 0..d {
            if i != j {
                sigma[(i, j)] *= 1.0 - shrinkage;
            }
        }
        // a column without within-class spread carries no direction; unit
        // variance keeps the shrunk estimate invertible
        if shrinkage > 0.0 && diag <= 1e-12 {
            sigma[(i, i)] = 1.0;
        }
    }
    let singular = || PcgError::Numeric("pooled covariance is singular; use a shrinkage > 0".into());
    let chol = sigma.cholesky().ok_or_else(singular)?;
    let l = chol.l_dirty();
    let pivots: Vec<f64> = (0..d).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let top = pivots.iter().cloned().fold(0.0, f64::max);
    if pivots.iter().any(|&p| !(p > 1e-10 * top)) {
        return Err(singular());
    }
    let mut weights = Vec::with_capacity(classes);
    let mut biases = Vec::with_capacity(classes);
    for (m, &c) in means.iter().zip(&counts) {
        if c == 0 {
            weights.push(vec![0.0; d]);
            biases.push(f64::NEG_INFINITY);
            continue;
        }
        let mv = DVector::from_column_slice(m);
        let w = chol.solve(&mv);
        biases.push(-0.5 * mv.dot(&w) + (c as f64 / n as f64).ln());
        weights.push(w.iter().copied().collect());
    }
    Ok(LinearModel {
        kind: ClassifierKind::Lda,
        weights,
        biases,
        scaler,
    })
}
