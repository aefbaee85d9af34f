use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};

use pcgkit::acoustic;
use pcgkit::autoencoder::{
    feature_statistics, fuse_features, prepare_spectrogram, recording_spectrogram, train_autoencoder,
    write_features_csv, write_statistics_csv, AeConfig, FeatureTag, Seq2Seq, THRESHOLDS_DB,
};
use pcgkit::config::RunConfig;
use pcgkit::container::ModelFile;
use pcgkit::corpus::{
    build_fused, emit_synthetic, ground_truth_name, load_corpus, read_ground_truth, write_ground_truth,
    CorpusEntry, LabeledCorpus, Recipe, SyntheticSpec,
};
use pcgkit::dsp::wav::{read_wav, write_wav};
use pcgkit::dsp::Recording;
use pcgkit::eval::{
    evaluate, format_report, hierarchical_decide, majority_vote, write_confusion_csv, write_metrics_csv,
    NormalVotePolicy, VoterOutput,
};
use pcgkit::label::LabelSet;
use pcgkit::pcgnet::{
    finetune, predict_recording, pretrain_binary, transfer_head, write_metrics_log, Architecture, BranchCnn,
    FrontEnd, LabeledCycle, TrainConfig, BINARY_HEAD, SEVERITY_HEAD,
};
use pcgkit::pipeline::{Preprocessor, MODEL_RATE};
use pcgkit::segmentation::{boundary_recall, SegmentConfig, CYCLE_SECONDS};
use pcgkit::shallow::{train_lda, train_mlp, train_svm, Classifier, MlpConfig, SvmConfig};
use pcgkit::{PcgError, Result};

use super::tables::{key, label_set_of, read_features, read_labels, read_metrics, write_predictions};
use super::{Command, FeatureKind, Input};

/// Creates the run directory and records the effective configuration.
fn run_dir(out: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| PcgError::io(out, e))?;
    let command: Vec<String> = std::env::args().collect();
    cfg.write_snapshot(out, &command.join(" "))
}

fn load_input(input: &Input) -> Result<LabeledCorpus> {
    if let Some(path) = &input.recipe {
        let recipe = Recipe::load(path)?;
        let fused = build_fused(&recipe.load_sources()?, &recipe)?;
        log::info!("{} recipe: {} recordings", recipe.role, fused.len());
        return Ok(fused);
    }
    let manifest = input.manifest.as_ref().ok_or_else(|| PcgError::Config("--manifest or --recipe is required".into()))?;
    let dir = match &input.audio_dir {
        Some(d) => d.clone(),
        None => manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    load_corpus(&dir, manifest, "input")
}

fn manifest_input(manifest: &Path) -> Input {
    Input {
        manifest: Some(manifest.to_path_buf()),
        audio_dir: None,
        recipe: None,
    }
}

fn read_entry(e: &CorpusEntry) -> Result<Recording> {
    let mut rec = read_wav(&e.path)?.with_source(e.file_name());
    rec.label = e.label;
    Ok(rec)
}

fn preprocessor(cfg: &RunConfig) -> Result<Preprocessor> {
    Preprocessor::new(cfg.get("fir_order"), SegmentConfig::default())
}

/// Cycles of every labeled recording; recordings without a complete cycle are skipped.
fn labeled_cycles(corpus: &LabeledCorpus, pre: &Preprocessor) -> Result<Vec<LabeledCycle>> {
    let mut out = Vec::new();
    for e in &corpus.entries {
        let label = e
            .label
            .ok_or_else(|| PcgError::Pipeline(format!("{} has no label", e.file_name())))?;
        match pre.cycles(&read_entry(e)?) {
            Ok(cycles) => out.extend(cycles.into_iter().map(|cycle| LabeledCycle { cycle, label })),
            Err(PcgError::NoCycles(msg)) => warn!("{}: skipped, {msg}", e.file_name()),
            Err(err) => return Err(err),
        }
    }
    info!("{} cycles from {} recordings", out.len(), corpus.len());
    Ok(out)
}

fn train_config(cfg: &RunConfig, stage: &str) -> TrainConfig {
    TrainConfig {
        epochs: cfg.get(&format!("{stage}.epochs")),
        lr: cfg.get(&format!("{stage}.lr")),
        batch_size: cfg.get(&format!("{stage}.batch_size")),
        seed: cfg.get("seed"),
        class_weighted: cfg.get("class_weighted"),
        target_uar: cfg.get_opt(&format!("{stage}.target_uar")),
        clip_norm: None,
    }
}

fn ae_config(cfg: &RunConfig) -> AeConfig {
    AeConfig {
        hidden: cfg.get("ae.hidden"),
        epochs: cfg.get("ae.epochs"),
        lr: cfg.get("ae.lr"),
        clip_norm: cfg.get("ae.clip_norm"),
        frame_stride: cfg.get("ae.frame_stride"),
        seed: cfg.get("seed"),
    }
}

fn thresholds(cfg: &RunConfig) -> Vec<i32> {
    cfg.get_list("ae.thresholds").into_iter().map(|t| t as i32).collect()
}

fn ae_path(dir: &Path, threshold: i32) -> PathBuf {
    dir.join(format!("ae_{threshold}dB.pcgm"))
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Synth { n, duration, out } => synth(cfg, *n, *duration, out),
        Command::Preprocess { input, out } => preprocess(cfg, input, out),
        Command::Segment { input, out } => segment(cfg, input, out),
        Command::Pretrain { input, out } => pretrain(cfg, input, out),
        Command::Transfer { model, out } => transfer(cfg, model, out),
        Command::Finetune { model, input, devel, out } => finetune_cmd(cfg, model, input, devel.as_deref(), out),
        Command::TrainAe { input, out } => train_ae(cfg, input, out),
        Command::Features { input, kind, models, out } => features(cfg, input, *kind, models.as_deref(), out),
        Command::TrainShallow { features, labels, threshold, out } => {
            train_shallow(cfg, features, labels, threshold.as_deref(), out)
        }
        Command::Predict { model, manifest, audio_dir, features, threshold, out } => predict(
            cfg,
            model,
            manifest.as_ref().map(|m| Input {
                manifest: Some(m.clone()),
                audio_dir: audio_dir.clone(),
                recipe: None,
            }),
            features.as_deref(),
            threshold.as_deref(),
            out,
        ),
        Command::Ensemble { preds, gate, out } => ensemble(cfg, preds, gate.as_deref(), out),
        Command::Evaluate { pred, truth, out } => evaluate_cmd(cfg, pred, truth, out.as_deref()),
        Command::Report { metrics, out } => report(cfg, metrics, out.as_deref()),
    }
}

fn synth(cfg: &RunConfig, n: Option<usize>, duration: Option<f64>, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let spec = SyntheticSpec {
        count: n.unwrap_or(cfg.get("synth.count")),
        duration: duration.unwrap_or(cfg.get("synth.duration")),
        rate: cfg.get("synth.rate"),
        bpm: (cfg.get("synth.bpm_min"), cfg.get("synth.bpm_max")),
        snr_db: cfg.get("synth.snr_db"),
        seed: cfg.get("seed"),
    };
    let corpus = emit_synthetic(out, &spec)?;
    println!("wrote {} recordings to {}", corpus.len(), out.display());
    print!("{}", corpus.imbalance_report());
    Ok(())
}

fn preprocess(cfg: &RunConfig, input: &Input, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let corpus = load_input(input)?;
    let pre = preprocessor(cfg)?;
    let mut entries = Vec::new();
    for e in &corpus.entries {
        let mut rec = pre.condition(&read_entry(e)?)?;
        let peak = rec.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 1.0 {
            warn!("{}: peak {peak:.3} after conditioning, scaling into range", e.file_name());
            rec.samples.iter_mut().for_each(|v| *v /= peak);
        }
        let path = out.join(e.file_name());
        write_wav(&path, &rec)?;
        entries.push(CorpusEntry { path, ..e.clone() });
    }
    LabeledCorpus::new(entries)?.write_manifest(&out.join("manifest.csv"), out)?;
    println!("conditioned {} recordings at {MODEL_RATE} Hz", corpus.len());
    Ok(())
}

fn segment(cfg: &RunConfig, input: &Input, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let corpus = load_input(input)?;
    let pre = preprocessor(cfg)?;
    let summary = out.join("segments.csv");
    let io = |e| PcgError::io(&summary, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(&summary).map_err(io)?);
    writeln!(w, "filename,cycles,heart_rate_bpm,boundary_recall").map_err(io)?;
    let (mut hits, mut total) = (0, 0);
    for e in &corpus.entries {
        let rec = read_entry(e)?;
        let conditioned = pre.condition(&rec)?;
        let states = pre.states(&conditioned)?;
        let name = e.file_name();
        write_ground_truth(&out.join(ground_truth_name(&name)), &states)?;
        let onsets = states.s1_onsets();
        let cycles = onsets.len().saturating_sub(1);
        let bpm = match (onsets.first(), onsets.last()) {
            (Some(a), Some(b)) if cycles > 0 => 60.0 * cycles as f64 * states.rate / (b - a) as f64,
            _ => 0.0,
        };
        let truth_path = e.path.with_file_name(ground_truth_name(&name));
        let recall = if truth_path.exists() {
            let truth = read_ground_truth(&truth_path, rec.samples.len(), rec.rate)?;
            let (h, t) = boundary_recall(&truth, &states, 0.05);
            hits += h;
            total += t;
            format!("{}", h as f64 / t.max(1) as f64)
        } else {
            String::new()
        };
        writeln!(w, "{name},{cycles},{bpm:.2},{recall}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    if total > 0 {
        println!("boundaries within 50 ms: {hits}/{total} ({:.1}%)", 100.0 * hits as f64 / total as f64);
    }
    println!("segmented {} recordings", corpus.len());
    Ok(())
}

fn architecture(cfg: &RunConfig) -> Result<Architecture> {
    Ok(Architecture {
        front_end: cfg.raw("front_end").parse::<FrontEnd>()?,
        cycle_len: (CYCLE_SECONDS * MODEL_RATE).round() as usize,
        fir_len: cfg.get("tconv_len"),
        head: BINARY_HEAD.to_vec(),
        dropout: cfg.get("dropout"),
    })
}

fn print_last(log: &[pcgkit::pcgnet::EpochMetrics]) {
    if let Some(m) = log.last() {
        println!("epoch {}: loss {:.5}, UAR {:.4}", m.epoch, m.loss, m.uar);
    }
}

fn pretrain(cfg: &RunConfig, input: &Input, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let data = labeled_cycles(&load_input(input)?, &preprocessor(cfg)?)?;
    let (model, log) = pretrain_binary(architecture(cfg)?, &data, &train_config(cfg, "pretrain"))?;
    model.save(&out.join("model.pcgm"))?;
    write_metrics_log(&out.join("metrics_log.csv"), &log, &LabelSet::Binary.names())?;
    print_last(&log);
    Ok(())
}

fn transfer(cfg: &RunConfig, model: &Path, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let source = BranchCnn::load(model)?;
    let freeze: bool = cfg.get("finetune.freeze_branches");
    let target = transfer_head(&source, &SEVERITY_HEAD, freeze, cfg.get("seed"))?;
    target.save(&out.join("model.pcgm"))?;
    println!(
        "3-class model from {} ({} branches)",
        model.display(),
        if freeze { "frozen" } else { "trainable" }
    );
    Ok(())
}

fn finetune_cmd(cfg: &RunConfig, model: &Path, input: &Input, devel: Option<&Path>, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let mut m = BranchCnn::load(model)?;
    if m.arch.classes() != 3 {
        return Err(PcgError::Pipeline(format!(
            "{} has a {}-class head; run `transfer` first",
            model.display(),
            m.arch.classes()
        )));
    }
    let pre = preprocessor(cfg)?;
    let data = labeled_cycles(&load_input(input)?, &pre)?;
    let monitor = match devel {
        Some(d) => Some(labeled_cycles(&load_input(&manifest_input(d))?, &pre)?),
        None => None,
    };
    let log = finetune(&mut m, &data, &train_config(cfg, "finetune"), monitor.as_deref())?;
    m.save(&out.join("model.pcgm"))?;
    write_metrics_log(&out.join("metrics_log.csv"), &log, &LabelSet::Severity.names())?;
    print_last(&log);
    Ok(())
}

fn spectrograms(corpus: &LabeledCorpus) -> Result<Vec<(String, pcgkit::dsp::MelSpectrogram)>> {
    corpus
        .entries
        .iter()
        .map(|e| Ok((e.file_name(), recording_spectrogram(&read_entry(e)?)?)))
        .collect()
}

fn train_ae(cfg: &RunConfig, input: &Input, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let specs = spectrograms(&load_input(input)?)?;
    let ae = ae_config(cfg);
    let mut curves = Vec::new();
    for t in thresholds(cfg) {
        let frames = specs
            .iter()
            .map(|(_, s)| prepare_spectrogram(s, t as f64))
            .collect::<Result<Vec<_>>>()?;
        let (model, curve) = train_autoencoder(&frames, t, &ae)?;
        model.to_file(ae.epochs, ae.lr).save(&ae_path(out, t))?;
        println!(
            "{t} dB: mse {:.6} -> {:.6}",
            curve.first().copied().unwrap_or(0.0),
            curve.last().copied().unwrap_or(0.0)
        );
        curves.push((t, curve));
    }
    let path = out.join("ae_loss.csv");
    let io = |e| PcgError::io(&path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
    let header: Vec<String> = curves.iter().map(|(t, _)| format!("loss_{t}dB")).collect();
    writeln!(w, "epoch,{}", header.join(",")).map_err(io)?;
    for epoch in 0..ae.epochs {
        let row: Vec<String> = curves.iter().map(|(_, c)| c[epoch].to_string()).collect();
        writeln!(w, "{},{}", epoch + 1, row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn features(cfg: &RunConfig, input: &Input, kind: FeatureKind, models: Option<&Path>, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let corpus = load_input(input)?;
    let path = out.join("features.csv");
    match kind {
        FeatureKind::Acoustic => {
            let rows = corpus
                .entries
                .iter()
                .map(|e| Ok((e.file_name(), acoustic::extract_features(&read_entry(e)?)?)))
                .collect::<Result<Vec<_>>>()?;
            acoustic::write_features_csv(&path, &rows)?;
            println!("{} x {} acoustic features", rows.len(), acoustic::feature_names().len());
        }
        FeatureKind::Rl => {
            let dir = models.ok_or_else(|| PcgError::Pipeline("rl features need --models".into()))?;
            let ts = thresholds(cfg);
            let models = ts
                .iter()
                .map(|&t| Seq2Seq::from_file(ModelFile::load(&ae_path(dir, t))?))
                .collect::<Result<Vec<_>>>()?;
            let fuse = ts == THRESHOLDS_DB;
            let mut rows = Vec::new();
            let mut fused = Vec::new();
            for (name, spec) in spectrograms(&corpus)? {
                let parts = models
                    .iter()
                    .map(|m| m.extract(&prepare_spectrogram(&spec, m.threshold_db as f64)?))
                    .collect::<Result<Vec<_>>>()?;
                if fuse {
                    let f = fuse_features(&parts)?;
                    fused.push(f.clone());
                    rows.push((name.clone(), f));
                }
                rows.extend(parts.into_iter().map(|p| (name.clone(), p)));
            }
            write_features_csv(&path, &rows)?;
            if fuse {
                write_statistics_csv(&out.join("feature_means.csv"), &feature_statistics(&fused)?)?;
            }
            let dim = rows.iter().find(|(_, f)| f.tag != FeatureTag::Fused).map_or(0, |(_, f)| f.values.len());
            println!("{} recordings, {dim}-d per threshold{}", corpus.len(), if fuse { ", fused" } else { "" });
        }
    }
    Ok(())
}

fn train_shallow(cfg: &RunConfig, features: &Path, labels: &Path, tags: Option<&str>, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let rows = read_features(features, tags)?;
    let truth = read_labels(labels)?;
    let by_key = truth.by_key();
    let mut x = Vec::new();
    let mut names = Vec::new();
    let mut labels_in = Vec::new();
    for (file, v) in rows {
        let row = by_key
            .get(&key(&file))
            .ok_or_else(|| PcgError::Pipeline(format!("no label for {file}")))?;
        x.push(v);
        labels_in.push(row.label);
        names.push(file);
    }
    let set = label_set_of(&labels_in);
    let y: Vec<usize> = labels_in.iter().map(|&l| set.index(l).unwrap()).collect();
    let k = set.len();
    let seed = cfg.get("seed");
    let model = match cfg.raw("shallow.method") {
        "svm" => {
            let svm = SvmConfig {
                c: cfg.get("shallow.c"),
                tol: cfg.get("shallow.tol"),
                max_sweeps: cfg.get("shallow.max_sweeps"),
                seed,
            };
            Classifier::Linear(train_svm(&x, &y, k, &svm)?.0)
        }
        "lda" => Classifier::Linear(train_lda(&x, &y, k, cfg.get("shallow.shrinkage"))?),
        _ => {
            let mlp = MlpConfig {
                hidden: cfg.get_list("shallow.mlp_hidden").iter().map(|&h| h as usize).collect(),
                epochs: cfg.get("shallow.mlp_epochs"),
                lr: cfg.get("shallow.mlp_lr"),
                batch_size: MlpConfig::default().batch_size,
                class_weighted: cfg.get("class_weighted"),
                seed,
            };
            Classifier::Mlp(train_mlp(&x, &y, k, &mlp)?)
        }
    };
    model.to_file().save(&out.join("model.pcgm"))?;
    let preds = x.iter().map(|r| Ok(model.predict(r)?.0)).collect::<Result<Vec<_>>>()?;
    let eval = evaluate(&preds, &y, &set.names())?;
    write_metrics_csv(&out.join("train_metrics.csv"), &eval)?;
    println!("{} on {} x {}: training UAR {:.4}", cfg.raw("shallow.method"), x.len(), model.dim(), eval.uar);
    Ok(())
}

fn predict(
    cfg: &RunConfig,
    model: &Path,
    input: Option<Input>,
    features: Option<&Path>,
    tags: Option<&str>,
    out: &Path,
) -> Result<()> {
    run_dir(out, cfg)?;
    let file = ModelFile::load(model)?;
    let kind = file.descriptor.require("kind")?.to_string();
    let mut rows = Vec::new();
    let set;
    if kind == "branch-cnn" {
        let input = input.ok_or_else(|| PcgError::Pipeline("branch CNN prediction needs --manifest".into()))?;
        let cnn = BranchCnn::from_file(file)?;
        set = cnn.arch.label_set()?;
        let pre = preprocessor(cfg)?;
        for e in &load_input(&input)?.entries {
            let cycles = pre.cycles(&read_entry(e)?)?;
            let p = predict_recording(&cnn, &cycles)?;
            rows.push((e.file_name(), p.class, p.posterior));
        }
    } else {
        let features =
            features.ok_or_else(|| PcgError::Pipeline(format!("a `{kind}` model predicts from --features")))?;
        let clf = Classifier::from_file(file)?;
        set = LabelSet::for_classes(clf.classes())
            .ok_or_else(|| PcgError::Pipeline(format!("model has {} classes", clf.classes())))?;
        for (name, v) in read_features(features, tags)? {
            let (class, scores) = clf.predict(&v)?;
            rows.push((name, class, scores));
        }
    }
    write_predictions(&out.join("predictions.csv"), set, &rows)?;
    println!("{} predictions", rows.len());
    Ok(())
}

/// Posteriors are kept when the scores form a distribution; raw scores vote hard.
fn vote(voter: &str, set_names: &[String], row: &super::tables::PredictionRow) -> Result<VoterOutput> {
    let class = LabelSet::Severity
        .labels()
        .iter()
        .position(|&l| l == row.label)
        .ok_or_else(|| PcgError::Pipeline(format!("{voter}: `{}` is not a severity label", row.label)))?;
    let severity: Vec<String> = LabelSet::Severity.names().iter().map(|s| s.to_string()).collect();
    match &row.scores {
        Some(s) if set_names == severity.as_slice() => {
            VoterOutput::soft(voter, class, s.clone()).or_else(|_| Ok(VoterOutput::hard(voter, class)))
        }
        _ => Ok(VoterOutput::hard(voter, class)),
    }
}

fn ensemble(cfg: &RunConfig, preds: &[PathBuf], gate: Option<&Path>, out: &Path) -> Result<()> {
    run_dir(out, cfg)?;
    let tables = preds.iter().map(|p| read_labels(p)).collect::<Result<Vec<_>>>()?;
    let maps: Vec<_> = tables.iter().map(|t| t.by_key()).collect();
    let gate = gate.map(read_labels).transpose()?;
    let gate_map = gate.as_ref().map(|g| g.by_key());
    let policy = match cfg.raw("ensemble.normal_policy") {
        "abstain" => NormalVotePolicy::Abstain,
        _ => NormalVotePolicy::Redistribute,
    };
    let set = LabelSet::Severity;
    let mut rows = Vec::new();
    for row in &tables[0].rows {
        let k = key(&row.filename);
        let mut votes = Vec::new();
        for (i, (m, t)) in maps.iter().zip(&tables).enumerate() {
            let r = m
                .get(&k)
                .ok_or_else(|| PcgError::Pipeline(format!("{} has no prediction for {k}", preds[i].display())))?;
            votes.push(vote(&preds[i].display().to_string(), &t.names, r)?);
        }
        let label = match &gate_map {
            Some(g) => {
                let stage1 = g.get(&k).ok_or_else(|| PcgError::Pipeline(format!("gate has no prediction for {k}")))?;
                hierarchical_decide(stage1.label, Some(&votes), policy)?
            }
            None => set.label(majority_vote(&votes, set.len())?),
        };
        let mut share = vec![0.0; set.len()];
        for v in &votes {
            share[v.class] += 1.0 / votes.len() as f64;
        }
        rows.push((row.filename.clone(), set.index(label).unwrap(), share));
    }
    write_predictions(&out.join("predictions.csv"), set, &rows)?;
    println!("{} ensemble decisions from {} voters", rows.len(), preds.len());
    Ok(())
}

fn evaluate_cmd(cfg: &RunConfig, pred: &Path, truth: &Path, out: Option<&Path>) -> Result<()> {
    let p = read_labels(pred)?;
    let t = read_labels(truth)?;
    let truth_map = t.by_key();
    let mut pairs = Vec::new();
    for r in &p.rows {
        let k = key(&r.filename);
        let tr = truth_map
            .get(&k)
            .ok_or_else(|| PcgError::Pipeline(format!("{} has no truth label", r.filename)))?;
        pairs.push((r.label, tr.label));
    }
    let set = label_set_of(pairs.iter().flat_map(|(a, b)| [a, b]));
    let preds: Vec<usize> = pairs.iter().map(|(a, _)| set.index(*a).unwrap()).collect();
    let truths: Vec<usize> = pairs.iter().map(|(_, b)| set.index(*b).unwrap()).collect();
    let eval = evaluate(&preds, &truths, &set.names())?;
    if let Some(out) = out {
        run_dir(out, cfg)?;
        write_metrics_csv(&out.join("metrics.csv"), &eval)?;
        write_confusion_csv(&out.join("confusion.csv"), &eval.confusion)?;
    }
    println!("UAR {:.4}  accuracy {:.4}  ({} recordings)", eval.uar, eval.accuracy, pairs.len());
    print!("{}", format_report(&eval));
    Ok(())
}

fn report(cfg: &RunConfig, specs: &[String], out: Option<&Path>) -> Result<()> {
    let mut systems: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
    let mut columns: Vec<String> = Vec::new();
    for s in specs {
        let (name, path) = s
            .split_once('=')
            .ok_or_else(|| PcgError::Config(format!("--metrics `{s}` is not NAME=PATH")))?;
        let rows = read_metrics(Path::new(path))?;
        for (m, _) in &rows {
            if !columns.contains(m) {
                columns.push(m.clone());
            }
        }
        systems.push((name.to_string(), rows.into_iter().collect()));
    }
    let width = systems.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
    let mut table = format!("{:width$}", "system");
    for c in &columns {
        table.push_str(&format!(" {:>16}", format!("{c} (%)")));
    }
    table.push('\n');
    for (name, m) in &systems {
        table.push_str(&format!("{name:width$}"));
        for c in &columns {
            match m.get(c) {
                Some(v) => table.push_str(&format!(" {:>16.2}", 100.0 * v)),
                None => table.push_str(&format!(" {:>16}", "-")),
            }
        }
        table.push('\n');
    }
    print!("{table}");
    if let Some(out) = out {
        run_dir(out, cfg)?;
        let path = out.join("report.csv");
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["system".to_string()];
        header.extend(columns.iter().cloned());
        w.write_record(&header)?;
        for (name, m) in &systems {
            let mut rec = vec![name.clone()];
            rec.extend(columns.iter().map(|c| m.get(c).map_or(String::new(), |v| v.to_string())));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| PcgError::io(&path, e))?;
    }
    Ok(())
}
