use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Architecture, BranchCnn};
use crate::error::{PcgError, Result};
use crate::eval::{ConfusionMatrix, Evaluation};
use crate::label::{Label, LabelSet};
use crate::nn::{class_weights, clip_global_norm, sgd_step, Gradients, Tape};
use crate::segmentation::CardiacCycle;

pub const DEFAULT_LR: f64 = 4.5e-5;
pub const DEFAULT_BATCH: usize = 64;
pub const DEFAULT_EPOCHS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub class_weighted: bool,
    /// Stop once the monitored UAR reaches this value.
    pub target_uar: Option<f64>,
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_LR,
            batch_size: DEFAULT_BATCH,
            seed: 0,
            class_weighted: true,
            target_uar: None,
            clip_norm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCycle {
    pub cycle: CardiacCycle,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub recalls: Vec<f64>,
    pub uar: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub posterior: Vec<f64>,
}

/// Element-wise mean of per-cycle posteriors.
pub fn mean_posterior(posteriors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = posteriors.first() else {
        return Err(PcgError::NoCycles("no cycles to average".into()));
    };
    let mut mean = vec![0.0; first.len()];
    for p in posteriors {
        if p.len() != mean.len() {
            return Err(PcgError::Shape("posteriors differ in length".into()));
        }
        mean.iter_mut().zip(p).for_each(|(m, v)| *m += v);
    }
    let n = posteriors.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Recording decision = argmax of the mean cycle posterior.
pub fn predict_recording(model: &BranchCnn, cycles: &[CardiacCycle]) -> Result<Prediction> {
    if cycles.is_empty() {
        return Err(PcgError::NoCycles("recording has no cardiac cycles".into()));
    }
    let posts = cycles
        .iter()
        .map(|c| model.cycle_posterior(c))
        .collect::<Result<Vec<_>>>()?;
    let posterior = mean_posterior(&posts)?;
    Ok(Prediction {
        class: argmax(&posterior),
        posterior,
    })
}

fn class_indices(data: &[LabeledCycle], set: LabelSet) -> Result<Vec<usize>> {
    data.iter()
        .map(|d| {
            set.index(d.label).ok_or_else(|| {
                PcgError::TrainingSetup(format!("label `{}` does not fit a {}-class model", d.label, set.len()))
            })
        })
        .collect()
}

/// Recording-level confusion over cycles grouped by parent recording.
fn recording_confusion(model: &BranchCnn, data: &[LabeledCycle], set: LabelSet) -> Result<ConfusionMatrix> {
    let targets = class_indices(data, set)?;
    let mut groups: BTreeMap<&str, (usize, Vec<CardiacCycle>)> = BTreeMap::new();
    for (d, &t) in data.iter().zip(&targets) {
        groups
            .entry(d.cycle.parent.as_str())
            .or_insert_with(|| (t, Vec::new()))
            .1
            .push(d.cycle.clone());
    }
    let mut cm = ConfusionMatrix::new(&set.names());
    for (truth, cycles) in groups.values() {
        cm.add(*truth, predict_recording(model, cycles)?.class)?;
    }
    Ok(cm)
}

fn require_all_classes(targets: &[usize], k: usize, what: &str) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; k];
    for &t in targets {
        counts[t] += 1;
    }
    if targets.is_empty() {
        return Err(PcgError::TrainingSetup(format!("{what} is empty")));
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(PcgError::TrainingSetup(format!("{what} lacks a class: counts {counts:?}")));
    }
    Ok(counts)
}

/// Minibatch SGD on weighted cross-entropy; metrics are recording-level on
/// `monitor` (the training data when `None`).
pub fn train(
    model: &mut BranchCnn,
    data: &[LabeledCycle],
    cfg: &TrainConfig,
    monitor: Option<&[LabeledCycle]>,
) -> Result<Vec<EpochMetrics>> {
    let set = model.arch.label_set()?;
    let targets = class_indices(data, set)?;
    let counts = require_all_classes(&targets, set.len(), "training set")?;
    let monitor = monitor.unwrap_or(data);
    require_all_classes(&class_indices(monitor, set)?, set.len(), "monitored set")?;
    if !(cfg.lr > 0.0) || cfg.batch_size == 0 {
        return Err(PcgError::TrainingSetup("learning rate and batch size must be positive".into()));
    }
    let weights = if cfg.class_weighted {
        class_weights(&counts)
    } else {
        vec![1.0; set.len()]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grads = Gradients::for_store(&model.store);
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let mut tape = Tape::new(&model.store);
                let logits = model.forward(&mut tape, &data[i].cycle, Some(&mut rng))?;
                let loss = tape.softmax_cross_entropy(logits, targets[i], weights[targets[i]])?;
                let l = tape.scalar(loss);
                if !l.is_finite() {
                    return Err(PcgError::TrainingDiverged(format!("non-finite loss at epoch {epoch}")));
                }
                total += l;
                tape.backward_scaled(loss, scale, &mut grads)?;
            }
            if let Some(c) = cfg.clip_norm {
                clip_global_norm(&mut grads, c);
            }
            sgd_step(&mut model.store, &grads, cfg.lr)?;
        }
        let confusion = recording_confusion(model, monitor, set)?;
        let eval = Evaluation::from_confusion(confusion)?;
        let m = EpochMetrics {
            epoch,
            loss: total / data.len() as f64,
            recalls: eval.recalls,
            uar: eval.uar,
            confusion: eval.confusion,
        };
        info!("epoch {epoch}: loss {:.5} uar {:.4}", m.loss, m.uar);
        model.meta.epochs += 1;
        let done = cfg.target_uar.is_some_and(|t| m.uar >= t);
        log.push(m);
        if done {
            break;
        }
    }
    model.meta.lr = cfg.lr;
    model.meta.seed = cfg.seed;
    Ok(log)
}

/// Builds a binary model and trains it on Normal vs Abnormal cycles.
pub fn pretrain_binary(
    arch: Architecture,
    data: &[LabeledCycle],
    cfg: &TrainConfig,
) -> Result<(BranchCnn, Vec<EpochMetrics>)> {
    if arch.classes() != 2 {
        return Err(PcgError::TrainingSetup("pretraining needs a 2-class head".into()));
    }
    let binary: Vec<LabeledCycle> = data
        .iter()
        .map(|d| LabeledCycle {
            cycle: d.cycle.clone(),
            label: d.label.to_binary(),
        })
        .collect();
    let mut model = BranchCnn::new(arch, cfg.seed)?;
    let log = train(&mut model, &binary, cfg, None)?;
    Ok((model, log))
}

/// Weighted fine-tuning of a 3-class model.
pub fn finetune(
    model: &mut BranchCnn,
    data: &[LabeledCycle],
    cfg: &TrainConfig,
    monitor: Option<&[LabeledCycle]>,
) -> Result<Vec<EpochMetrics>> {
    if model.arch.classes() != 3 {
        return Err(PcgError::TrainingSetup("fine-tuning needs a 3-class head".into()));
    }
    train(model, data, cfg, monitor)
}

/// `epoch,loss,recall_<class>...,uar`.
pub fn write_metrics_log(path: &Path, log: &[EpochMetrics], names: &[&str]) -> Result<()> {
    let io = |e| PcgError::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let header: Vec<String> = names.iter().map(|n| format!("recall_{n}")).collect();
    writeln!(w, "epoch,loss,{},uar", header.join(",")).map_err(io)?;
    for m in log {
        let r: Vec<String> = m.recalls.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{},{},{}", m.epoch, m.loss, r.join(","), m.uar).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_then_argmax() {
        let p = mean_posterior(&[vec![0.9, 0.1, 0.0], vec![0.5, 0.3, 0.2]]).unwrap();
        for (a, b) in p.iter().zip([0.7, 0.2, 0.1]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(argmax(&p), 0);
    }

    #[test]
    fn no_cycles() {
        assert!(matches!(mean_posterior(&[]), Err(PcgError::NoCycles(_))));
    }
}
