use super::param::{Gradients, ParamStore};
use crate::error::{PcgError, Result};

/// Plain SGD: p <- p - lr * g for trainable parameters.
///
/// Gradients are checked for finiteness before any value changes, so a
/// diverged step leaves the store untouched. Frozen parameters are never
/// written.
pub fn sgd_step(store: &mut ParamStore, grads: &Gradients, lr: f64) -> Result<()> {
    if !(lr >= 0.0) {
        return Err(PcgError::Parameter(format!("learning rate must be non-negative, got {lr}")));
    }
    if !grads.all_finite() {
        return Err(PcgError::TrainingDiverged("non-finite gradient".into()));
    }
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let Some(g) = grads.get(id) else { continue };
        let p = store.get_mut(id);
        if !p.trainable {
            continue;
        }
        for (v, gv) in p.value.data.iter_mut().zip(g) {
            *v -= lr * gv;
        }
    }
    Ok(())
}

/// Rescales the gradients so their global L2 norm is at most `max_norm`.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) {
    let norm = grads.global_norm();
    if norm > max_norm && norm.is_finite() {
        grads.scale(max_norm / norm);
    }
}

/// Inverse-frequency class weights w_c = N / (K * N_c); absent classes get 0.
pub fn class_weights(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { total as f64 / (k * c as f64) })
        .collect()
}

/// Adam with bias correction; frozen parameters are skipped like in SGD.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<()> {
        if !grads.all_finite() {
            return Err(PcgError::TrainingDiverged("non-finite gradient".into()));
        }
        if self.m.len() < store.len() {
            self.m.resize(store.len(), Vec::new());
            self.v.resize(store.len(), Vec::new());
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            let Some(g) = grads.get(id) else { continue };
            let p = store.get_mut(id);
            if !p.trainable {
                continue;
            }
            let (m, v) = (&mut self.m[id.index()], &mut self.v[id.index()]);
            if m.is_empty() {
                m.resize(g.len(), 0.0);
                v.resize(g.len(), 0.0);
            }
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p.value.data[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
