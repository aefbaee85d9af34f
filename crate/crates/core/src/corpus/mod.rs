//! Labeled corpora: manifests, relabeling, fused sets, splits and the synthetic generator.

mod emit;
mod fused;
pub mod synth;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PcgError, Result};
use crate::label::{Label, LabelSet};

pub use emit::{emit_synthetic, ground_truth_name, read_ground_truth, write_ground_truth, SyntheticSpec};
pub use fused::{build_fused, Recipe, Role, SourceFilter, SourceLocation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Devel,
    Test,
    Fold(usize),
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => f.write_str("train"),
            Split::Devel => f.write_str("devel"),
            Split::Test => f.write_str("test"),
            Split::Fold(k) => write!(f, "fold-{k}"),
        }
    }
}

impl FromStr for Split {
    type Err = PcgError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "train" => Ok(Split::Train),
            "devel" | "dev" => Ok(Split::Devel),
            "test" => Ok(Split::Test),
            _ => s
                .strip_prefix("fold-")
                .and_then(|k| k.parse().ok())
                .map(Split::Fold)
                .ok_or_else(|| PcgError::InvalidInput(format!("unknown split `{s}`"))),
        }
    }
}

/// Header information of one audio file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioInfo {
    pub rate: f64,
    pub samples: usize,
}

impl AudioInfo {
    pub fn duration(&self) -> f64 {
        self.samples as f64 / self.rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub label: Option<Label>,
    /// Corpus tag of the source this entry came from.
    pub source: String,
    pub split: Option<Split>,
    pub info: Option<AudioInfo>,
}

impl CorpusEntry {
    pub fn new(path: impl Into<PathBuf>, label: Option<Label>, source: &str) -> Self {
        CorpusEntry {
            path: path.into(),
            label,
            source: source.to_string(),
            split: None,
            info: None,
        }
    }

    /// File name without directories; manifests and label maps key on this.
    pub fn file_name(&self) -> String {
        self.path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledCorpus {
    pub entries: Vec<CorpusEntry>,
}

impl LabeledCorpus {
    /// Rejects duplicate paths.
    pub fn new(entries: Vec<CorpusEntry>) -> Result<Self> {
        let mut seen = HashMap::new();
        let mut problems = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            if let Some(first) = seen.insert(e.path.clone(), i) {
                problems.push(format!(
                    "entry {i}: duplicate path {} (first at entry {first})",
                    e.path.display()
                ));
            }
        }
        if !problems.is_empty() {
            return Err(PcgError::Load(problems));
        }
        Ok(LabeledCorpus { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Severity` when no entry is `abnormal`, `Binary` when no entry carries a
    /// severity grade, `None` for a mix of both vocabularies.
    pub fn label_set(&self) -> Option<LabelSet> {
        let labels: Vec<Label> = self.entries.iter().filter_map(|e| e.label).collect();
        let binary = labels.iter().all(|l| matches!(l, Label::Normal | Label::Abnormal));
        let severity = labels.iter().all(|&l| l != Label::Abnormal);
        if severity {
            Some(LabelSet::Severity)
        } else if binary {
            Some(LabelSet::Binary)
        } else {
            None
        }
    }

    /// Per-class counts in class-index order, plus the number of unlabeled entries.
    pub fn counts(&self, set: LabelSet) -> (Vec<usize>, usize) {
        let mut counts = vec![0; set.len()];
        let mut unlabeled = 0;
        for e in &self.entries {
            match e.label.and_then(|l| set.index(l)) {
                Some(i) => counts[i] += 1,
                None => unlabeled += 1,
            }
        }
        (counts, unlabeled)
    }

    /// Table of per-class counts and percentage shares.
    pub fn imbalance_report(&self) -> String {
        let set = self.label_set().unwrap_or(LabelSet::Severity);
        let (counts, unlabeled) = self.counts(set);
        let labeled: usize = counts.iter().sum();
        let mut out = format!("{:<10} {:>7} {:>7}\n", "class", "count", "share");
        for (name, &c) in set.names().iter().zip(&counts) {
            let share = if labeled == 0 { 0.0 } else { 100.0 * c as f64 / labeled as f64 };
            out.push_str(&format!("{name:<10} {c:>7} {share:>6.1}%\n"));
        }
        if unlabeled > 0 {
            out.push_str(&format!("{:<10} {unlabeled:>7}\n", "unlabeled"));
        }
        out.push_str(&format!("{:<10} {:>7}\n", "total", self.len()));
        out
    }

    pub fn filter(&self, keep: impl Fn(&CorpusEntry) -> bool) -> LabeledCorpus {
        LabeledCorpus {
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    pub fn in_split(&self, split: Split) -> LabeledCorpus {
        self.filter(|e| e.split == Some(split))
    }

    /// Drops every label; used for the unlabeled representation-learning set.
    pub fn strip_labels(&self) -> LabeledCorpus {
        let mut out = self.clone();
        out.entries.iter_mut().for_each(|e| e.label = None);
        out
    }

    /// Writes a `filename,label` manifest with paths relative to `root` when possible.
    pub fn write_manifest(&self, path: &Path, root: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["filename", "label"])?;
        for e in &self.entries {
            let rel = e.path.strip_prefix(root).unwrap_or(&e.path);
            let label = e.label.map_or("", |l| l.as_str());
            w.write_record([rel.to_string_lossy().as_ref(), label])?;
        }
        w.flush().map_err(|e| PcgError::io(path, e))
    }
}

fn wav_info(path: &Path) -> std::result::Result<AudioInfo, String> {
    let reader = hound::WavReader::open(path).map_err(|e| e.to_string())?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(format!("expected mono audio, found {} channels", spec.channels));
    }
    Ok(AudioInfo {
        rate: spec.sample_rate as f64,
        samples: reader.duration() as usize,
    })
}

/// Reads a manifest (`filename,label`, optional `split` column) whose file names are
/// relative to `audio_dir`. Every bad row is reported in one load error.
pub fn load_corpus(audio_dir: &Path, manifest: &Path, tag: &str) -> Result<LabeledCorpus> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(manifest)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => PcgError::io(manifest, io),
            kind => PcgError::Load(vec![format!("{}: {kind:?}", manifest.display())]),
        })?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(file_col), Some(label_col)) = (col("filename"), col("label")) else {
        return Err(PcgError::Load(vec![format!(
            "{}: header must contain `filename,label`",
            manifest.display()
        )]));
    };
    let split_col = col("split");

    let mut problems = Vec::new();
    let mut entries = Vec::new();
    let mut seen: HashMap<PathBuf, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let row = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("row {row}: {e}"));
                continue;
            }
        };
        let name = record.get(file_col).unwrap_or("");
        let raw_label = record.get(label_col).unwrap_or("");
        let path = audio_dir.join(name);
        let label = match raw_label.parse::<Label>() {
            Ok(l) => Some(l),
            Err(_) => {
                problems.push(format!("row {row}: unknown label `{raw_label}` for {name}"));
                None
            }
        };
        let split = match split_col.and_then(|c| record.get(c)).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => match s.parse::<Split>() {
                Ok(s) => Some(s),
                Err(e) => {
                    problems.push(format!("row {row}: {e}"));
                    None
                }
            },
        };
        if let Some(first) = seen.insert(path.clone(), row) {
            problems.push(format!("row {row}: duplicate path {name} (first at row {first})"));
            continue;
        }
        let info = match wav_info(&path) {
            Ok(info) => Some(info),
            Err(e) => {
                problems.push(format!("row {row}: cannot read {}: {e}", path.display()));
                None
            }
        };
        entries.push(CorpusEntry {
            path,
            label,
            source: tag.to_string(),
            split,
            info,
        });
    }
    let corpus = LabeledCorpus { entries };
    if problems.is_empty() && corpus.label_set().is_none() {
        problems.push(format!(
            "{}: mixes abnormal with severity grades",
            manifest.display()
        ));
    }
    if !problems.is_empty() {
        return Err(PcgError::Load(problems));
    }
    log::info!("{tag}: loaded {} recordings", corpus.len());
    Ok(corpus)
}

/// Reads a `filename,label` map for [`relabel_severity`].
pub fn load_label_map(path: &Path) -> Result<BTreeMap<String, Label>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut map = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let (name, label) = (record.get(0).unwrap_or(""), record.get(1).unwrap_or(""));
        let label = label
            .parse::<Label>()
            .map_err(|_| PcgError::Relabel(format!("row {}: unknown label `{label}`", i + 2)))?;
        map.insert(name.to_string(), label);
    }
    Ok(map)
}

/// Replaces labels with severity grades from `map`, keyed by file name.
pub fn relabel_severity(corpus: &LabeledCorpus, map: &BTreeMap<String, Label>) -> Result<LabeledCorpus> {
    if let Some((name, l)) = map.iter().find(|(_, l)| LabelSet::Severity.index(**l).is_none()) {
        return Err(PcgError::Relabel(format!("{name}: `{l}` is not a severity label")));
    }
    let mut out = corpus.clone();
    let mut missing = Vec::new();
    for e in &mut out.entries {
        match map.get(&e.file_name()) {
            Some(&l) => e.label = Some(l),
            None => missing.push(e.file_name()),
        }
    }
    if !missing.is_empty() {
        return Err(PcgError::Relabel(format!(
            "no severity label for {} recording(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    Ok(out)
}

/// Stratified random split into train/devel/test; each entry's `split` is set.
/// Fractions apply per class; the test set gets the remainder.
pub fn split_stratified(corpus: &LabeledCorpus, train: f64, devel: f64, seed: u64) -> Result<LabeledCorpus> {
    if !(train >= 0.0 && devel >= 0.0 && train + devel <= 1.0) {
        return Err(PcgError::Parameter(format!(
            "split fractions train={train} devel={devel} must be non-negative and sum to at most 1"
        )));
    }
    let mut groups: BTreeMap<Option<Label>, Vec<usize>> = BTreeMap::new();
    for (i, e) in corpus.entries.iter().enumerate() {
        groups.entry(e.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = corpus.clone();
    for idx in groups.values_mut() {
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let n_train = (train * n).round() as usize;
        let n_devel = ((devel * n).round() as usize).min(idx.len() - n_train);
        for (j, &i) in idx.iter().enumerate() {
            out.entries[i].split = Some(if j < n_train {
                Split::Train
            } else if j < n_train + n_devel {
                Split::Devel
            } else {
                Split::Test
            });
        }
    }
    Ok(out)
}

/// Assigns each entry to one of `k` folds, stratified by label.
pub fn split_folds(corpus: &LabeledCorpus, k: usize, seed: u64) -> Result<LabeledCorpus> {
    if k == 0 {
        return Err(PcgError::Parameter("fold count must be positive".into()));
    }
    let mut groups: BTreeMap<Option<Label>, Vec<usize>> = BTreeMap::new();
    for (i, e) in corpus.entries.iter().enumerate() {
        groups.entry(e.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = corpus.clone();
    let mut next = 0;
    for idx in groups.values_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter() {
            out.entries[i].split = Some(Split::Fold(next % k));
            next += 1;
        }
    }
    Ok(out)
}
