use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pcgkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcgkit")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pcgkit(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, n: usize) -> PathBuf {
    let out = dir.join("synth");
    ok(&["synth", "--n", &n.to_string(), "--duration", "4", "--seed", "3", "--out", p(&out)]);
    out
}

#[test]
fn synth_writes_corpus_and_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth(dir.path(), 6);
    let manifest = std::fs::read_to_string(out.join("manifest.csv")).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert_eq!(lines[0], "filename,label");
    assert_eq!(lines.len(), 7);
    for i in 0..6 {
        assert!(out.join(format!("rec{i:03}.wav")).exists());
        assert!(out.join(format!("rec{i:03}.states.csv")).exists());
    }
    assert!(out.join("config.txt").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pcgkit(&["evaluate", "--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let r = pcgkit(&["synth", "--set", "no.such_key=1", "--out", p(dir.path())]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(pcgkit(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let r = pcgkit(&["segment", "--manifest", p(&dir.path().join("absent.csv")), "--out", p(&dir.path().join("o"))]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn evaluate_identical_files_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth(dir.path(), 6);
    let m = out.join("manifest.csv");
    let stdout = ok(&["evaluate", "--pred", p(&m), "--truth", p(&m), "--out", p(&dir.path().join("eval"))]);
    assert!(stdout.contains("UAR 1.0000"), "{stdout}");
    let metrics = std::fs::read_to_string(dir.path().join("eval/metrics.csv")).unwrap();
    assert!(metrics.lines().any(|l| l == "uar,1"), "{metrics}");
}

#[test]
fn same_seed_gives_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 6);
    let m = data.join("manifest.csv");
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(&["pretrain", "--manifest", p(&m), "--set", "pretrain.epochs=1", "--seed", "5", "--out", p(&out)]);
        files.push(std::fs::read(out.join("model.pcgm")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn end_to_end_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth(d, 9);
    let m = data.join("manifest.csv");
    let fast = ["--set", "pretrain.epochs=1", "--set", "finetune.epochs=1", "--set", "pretrain.lr=0.01"];
    let with = |args: &[&str]| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend_from_slice(&fast);
        ok(&v)
    };

    let seg = with(&["segment", "--manifest", p(&m), "--out", p(&d.join("seg"))]);
    assert!(seg.contains("boundaries within 50 ms"), "{seg}");
    assert!(d.join("seg/segments.csv").exists());

    with(&["pretrain", "--manifest", p(&m), "--out", p(&d.join("pre"))]);
    with(&["transfer", "--model", p(&d.join("pre/model.pcgm")), "--out", p(&d.join("tr"))]);
    with(&["finetune", "--model", p(&d.join("tr/model.pcgm")), "--manifest", p(&m), "--out", p(&d.join("ft"))]);
    let log = std::fs::read_to_string(d.join("ft/metrics_log.csv")).unwrap();
    assert!(log.starts_with("epoch,loss,recall_normal,recall_mild,recall_severe,uar"));

    with(&["predict", "--model", p(&d.join("ft/model.pcgm")), "--manifest", p(&m), "--out", p(&d.join("cnn"))]);
    let preds = std::fs::read_to_string(d.join("cnn/predictions.csv")).unwrap();
    assert!(preds.starts_with("filename,predicted,score_normal,score_mild,score_severe"), "{preds}");
    assert_eq!(preds.lines().count(), 10);

    with(&["features", "--manifest", p(&m), "--kind", "acoustic", "--out", p(&d.join("feat"))]);
    let feats = d.join("feat/features.csv");
    for (method, name) in [("svm", "svm"), ("lda", "lda")] {
        let set = format!("shallow.method={method}");
        with(&["train-shallow", "--features", p(&feats), "--labels", p(&m), "--set", &set, "--out", p(&d.join(name))]);
        let model = d.join(name).join("model.pcgm");
        with(&["predict", "--model", p(&model), "--features", p(&feats), "--out", p(&d.join(format!("{name}-pred")))]);
    }

    let ens = d.join("ens");
    with(&[
        "ensemble",
        "--pred",
        p(&d.join("cnn/predictions.csv")),
        "--pred",
        p(&d.join("svm-pred/predictions.csv")),
        "--pred",
        p(&d.join("lda-pred/predictions.csv")),
        "--out",
        p(&ens),
    ]);
    let eval = d.join("eval");
    let stdout = with(&["evaluate", "--pred", p(&ens.join("predictions.csv")), "--truth", p(&m), "--out", p(&eval)]);
    assert!(stdout.contains("UAR"), "{stdout}");
    let metrics = format!("ensemble={}", p(&eval.join("metrics.csv")));
    let table = with(&["report", "--metrics", &metrics]);
    assert!(table.lines().next().unwrap().contains("uar (%)"), "{table}");
    assert!(table.lines().nth(1).unwrap().starts_with("ensemble"));

    let snapshot = std::fs::read_to_string(d.join("ft/config.txt")).unwrap();
    assert!(snapshot.contains("finetune.epochs = 1"), "{snapshot}");
}

#[test]
fn recipe_input_builds_fused_set() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 6);
    let recipe = dir.path().join("sl.recipe");
    std::fs::write(&recipe, "role = sl\nsources = syn\nsyn.labels = normal, severe\nsyn.manifest = synth/manifest.csv\n").unwrap();
    let out = dir.path().join("seg");
    ok(&["segment", "--recipe", p(&recipe), "--out", p(&out)]);
    let rows = std::fs::read_to_string(out.join("segments.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4, "{rows}");

    let both = pcgkit(&["segment", "--recipe", p(&recipe), "--manifest", p(&data.join("manifest.csv")), "--out", p(&out)]);
    assert_eq!(both.status.code(), Some(2));
    assert_eq!(pcgkit(&["segment", "--out", p(&out)]).status.code(), Some(2));
}
