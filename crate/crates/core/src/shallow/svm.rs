use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linear::{ClassifierKind, LinearModel, Standardizer};
use super::{check_training, DEFAULT_C, DEFAULT_TOL};
use crate::error::{PcgError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    /// Stop when the spread of projected gradients in a sweep falls below this.
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_sweeps: 1000,
            seed: 0,
        }
    }
}

/// Per one-vs-rest problem: sweeps used and the dual objective after each sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmReport {
    pub sweeps: Vec<usize>,
    pub dual_objective: Vec<Vec<f64>>,
}

/// One binary L1-loss SVM on rows augmented with a constant 1 (the bias).
fn solve_binary(z: &[Vec<f64>], y: &[f64], cfg: &SvmConfig, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let n = z.len();
    let d = z[0].len();
    let qii: Vec<f64> = z.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut objective = Vec::new();
    let mut last = 0.0f64;
    for _ in 0..cfg.max_sweeps {
        order.shuffle(rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = y[i] * (w.iter().zip(&z[i]).map(|(a, c)| a * c).sum::<f64>() + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= cfg.c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-15 {
                let new = (alpha[i] - g / qii[i]).clamp(0.0, cfg.c);
                let delta = (new - alpha[i]) * y[i];
                alpha[i] = new;
                w.iter_mut().zip(&z[i]).for_each(|(a, c)| *a += delta * c);
                b += delta;
            }
        }
        let wnorm = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        let dual = alpha.iter().sum::<f64>() - 0.5 * wnorm;
        if dual < last - 1e-12 * (1.0 + last.abs()) {
            return Err(PcgError::Numeric(format!(
                "SVM dual objective decreased from {last} to {dual}"
            )));
        }
        last = dual;
        objective.push(dual);
        if pg_max - pg_min <= cfg.tol {
            break;
        }
    }
    Ok((w, b, objective))
}

/// One-vs-rest linear SVMs solved by dual coordinate descent on z-scored features.
pub fn train_svm(x: &[Vec<f64>], y: &[usize], classes: usize, cfg: &SvmConfig) -> Result<(LinearModel, SvmReport)> {
    check_training(x, y, classes)?;
    if !(cfg.c > 0.0) || !(cfg.tol > 0.0) {
        return Err(PcgError::Parameter("SVM needs C > 0 and tol > 0".into()));
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.apply_all(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = Vec::with_capacity(classes);
    let mut biases = Vec::with_capacity(classes);
    let mut report = SvmReport {
        sweeps: Vec::new(),
        dual_objective: Vec::new(),
    };
    for k in 0..classes {
        let yk: Vec<f64> = y.iter().map(|&c| if c == k { 1.0 } else { -1.0 }).collect();
        let (w, b, obj) = solve_binary(&z, &yk, cfg, &mut rng)?;
        weights.push(w);
        biases.push(b);
        report.sweeps.push(obj.len());
        report.dual_objective.push(obj);
    }
    Ok((
        LinearModel {
            kind: ClassifierKind::Svm,
            weights,
            biases,
            scaler,
        },
        report,
    ))
}
