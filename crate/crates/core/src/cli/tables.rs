//! CSV tables exchanged between subcommands.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use pcgkit::label::{Label, LabelSet};
use pcgkit::{PcgError, Result};

/// Basename of a manifest or prediction `filename` cell.
pub fn key(filename: &str) -> String {
    Path::new(filename)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| filename.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub filename: String,
    pub label: Label,
    /// Per-class scores in `names` order, when the file has score columns.
    pub scores: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub names: Vec<String>,
    pub rows: Vec<PredictionRow>,
}

impl PredictionTable {
    pub fn by_key(&self) -> BTreeMap<String, &PredictionRow> {
        self.rows.iter().map(|r| (key(&r.filename), r)).collect()
    }
}

/// `filename,predicted,score_<class>...`.
pub fn write_predictions(path: &Path, set: LabelSet, rows: &[(String, usize, Vec<f64>)]) -> Result<()> {
    let io = |e| PcgError::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let header: Vec<String> = set.names().iter().map(|n| format!("score_{n}")).collect();
    writeln!(w, "filename,predicted,{}", header.join(",")).map_err(io)?;
    for (name, class, scores) in rows {
        let s: Vec<String> = scores.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{name},{},{}", set.label(*class), s.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a prediction file or a manifest: the label comes from a `predicted`
/// column, else from `label`.
pub fn read_labels(path: &Path) -> Result<PredictionTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |n: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(n));
    let file_col = col("filename")
        .ok_or_else(|| PcgError::InvalidInput(format!("{}: no `filename` column", path.display())))?;
    let label_col = col("predicted").or_else(|| col("label")).ok_or_else(|| {
        PcgError::InvalidInput(format!("{}: needs a `predicted` or `label` column", path.display()))
    })?;
    let score_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("score_").map(|n| (i, n.to_string())))
        .collect();
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(label_col).unwrap_or("");
        let label = match raw.parse::<Label>() {
            Ok(l) => l,
            Err(_) => {
                problems.push(format!("{} row {}: unknown label `{raw}`", path.display(), i + 2));
                continue;
            }
        };
        let scores = if score_cols.is_empty() {
            None
        } else {
            let s: std::result::Result<Vec<f64>, _> =
                score_cols.iter().map(|(c, _)| record.get(*c).unwrap_or("").parse::<f64>()).collect();
            match s {
                Ok(s) => Some(s),
                Err(_) => {
                    problems.push(format!("{} row {}: bad score", path.display(), i + 2));
                    continue;
                }
            }
        };
        rows.push(PredictionRow {
            filename: record.get(file_col).unwrap_or("").to_string(),
            label,
            scores,
        });
    }
    if !problems.is_empty() {
        return Err(PcgError::Load(problems));
    }
    Ok(PredictionTable {
        names: score_cols.into_iter().map(|(_, n)| n).collect(),
        rows,
    })
}

/// Severity unless some label is `abnormal`, in which case everything folds to binary.
pub fn label_set_of<'a>(labels: impl IntoIterator<Item = &'a Label>) -> LabelSet {
    if labels.into_iter().any(|&l| l == Label::Abnormal) {
        LabelSet::Binary
    } else {
        LabelSet::Severity
    }
}

/// Feature rows keyed by file. Files with a `threshold` column select rows by
/// tag; several comma-separated tags are concatenated per file in that order.
pub fn read_features(path: &Path, tags: Option<&str>) -> Result<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("filename") {
        return Err(PcgError::InvalidInput(format!("{}: first column must be `filename`", path.display())));
    }
    let tagged = headers.get(1) == Some("threshold");
    let first = if tagged { 2 } else { 1 };
    let wanted: Vec<String> = match (tagged, tags) {
        (true, Some(t)) => t.split(',').map(|s| s.trim().to_string()).collect(),
        (true, None) => vec!["fused".to_string()],
        (false, Some(_)) => {
            return Err(PcgError::InvalidInput(format!(
                "{}: has no threshold column to select from",
                path.display()
            )))
        }
        (false, None) => vec![String::new()],
    };
    let mut order: Vec<String> = Vec::new();
    let mut parts: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let file = record.get(0).unwrap_or("").to_string();
        let tag = if tagged { record.get(1).unwrap_or("").to_string() } else { String::new() };
        if !wanted.contains(&tag) {
            continue;
        }
        let values = record
            .iter()
            .skip(first)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| PcgError::InvalidInput(format!("{} row {}: non-numeric feature", path.display(), i + 2)))?;
        if !order.contains(&file) {
            order.push(file.clone());
        }
        parts.insert((file, tag), values);
    }
    let mut out = Vec::with_capacity(order.len());
    for file in order {
        let mut v = Vec::new();
        for tag in &wanted {
            let p = parts.get(&(file.clone(), tag.clone())).ok_or_else(|| {
                PcgError::InvalidInput(format!("{}: no `{tag}` row for {file}", path.display()))
            })?;
            v.extend_from_slice(p);
        }
        out.push((file, v));
    }
    if out.is_empty() {
        return Err(PcgError::InvalidInput(format!(
            "{}: no rows with tag {}",
            path.display(),
            wanted.join(",")
        )));
    }
    Ok(out)
}

/// `metric,value` rows in file order.
pub fn read_metrics(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let v = record
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| PcgError::InvalidInput(format!("{}: bad metric value", path.display())))?;
        rows.push((record.get(0).unwrap_or("").to_string(), v));
    }
    Ok(rows)
}
