use std::io::Write;
use std::path::Path;

use crate::error::{PcgError, Result};

/// K x K counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        let k = names.len();
        ConfusionMatrix {
            counts: vec![vec![0; k]; k],
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn from_counts<S: AsRef<str>>(names: &[S], counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = names.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(PcgError::Shape(format!("confusion matrix must be {k}x{k}")));
        }
        let mut cm = ConfusionMatrix::new(names);
        cm.counts = counts;
        Ok(cm)
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.k();
        if truth >= k || predicted >= k {
            return Err(PcgError::InvalidInput(format!(
                "class index out of range for {k} classes: ({truth}, {predicted})"
            )));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn recall(&self, class: usize) -> Result<f64> {
        let n = self.row_sum(class);
        if n == 0 {
            return Err(PcgError::MetricUndefined(format!(
                "no true samples of class `{}`",
                self.names[class]
            )));
        }
        Ok(self.counts[class][class] as f64 / n as f64)
    }

    pub fn recalls(&self) -> Result<Vec<f64>> {
        (0..self.k()).map(|c| self.recall(c)).collect()
    }

    /// Mean of the per-class recalls.
    pub fn uar(&self) -> Result<f64> {
        let r = self.recalls()?;
        Ok(r.iter().sum::<f64>() / r.len() as f64)
    }

    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(PcgError::MetricUndefined("empty confusion matrix".into()));
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// Header `truth,<class names>`, then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut s = format!("truth,{}\n", self.names.join(","));
        for (name, row) in self.names.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            s.push_str(&format!("{name},{}\n", cells.join(",")));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub uar: f64,
    pub accuracy: f64,
    pub recalls: Vec<f64>,
}

pub fn evaluate<S: AsRef<str>>(predictions: &[usize], truths: &[usize], names: &[S]) -> Result<Evaluation> {
    if predictions.len() != truths.len() {
        return Err(PcgError::InvalidInput(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(names);
    for (&p, &t) in predictions.iter().zip(truths) {
        cm.add(t, p)?;
    }
    Evaluation::from_confusion(cm)
}

impl Evaluation {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        let recalls = confusion.recalls()?;
        let uar = recalls.iter().sum::<f64>() / recalls.len() as f64;
        let accuracy = confusion.accuracy()?;
        Ok(Evaluation {
            confusion,
            uar,
            accuracy,
            recalls,
        })
    }

    /// `(metric, value)` rows in report order.
    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut rows = vec![("uar".to_string(), self.uar), ("accuracy".to_string(), self.accuracy)];
        for (name, r) in self.confusion.names().iter().zip(&self.recalls) {
            rows.push((format!("recall_{name}"), *r));
        }
        rows
    }
}

pub fn format_report(eval: &Evaluation) -> String {
    let mut s = String::new();
    for (m, v) in eval.rows() {
        s.push_str(&format!("{m:<18} {:>7.2}%\n", 100.0 * v));
    }
    s.push_str("\nconfusion (rows = truth)\n");
    let names = eval.confusion.names();
    let w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(6);
    s.push_str(&format!("{:w$}", ""));
    for n in names {
        s.push_str(&format!(" {n:>w$}"));
    }
    s.push('\n');
    for (n, row) in names.iter().zip(eval.confusion.counts()) {
        s.push_str(&format!("{n:w$}"));
        for c in row {
            s.push_str(&format!(" {c:>w$}"));
        }
        s.push('\n');
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| PcgError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| PcgError::io(path, e))
}

/// `metric,value` CSV.
pub fn write_metrics_csv(path: &Path, eval: &Evaluation) -> Result<()> {
    let mut s = String::from("metric,value\n");
    for (m, v) in eval.rows() {
        s.push_str(&format!("{m},{v}\n"));
    }
    write_text(path, &s)
}

pub fn write_confusion_csv(path: &Path, cm: &ConfusionMatrix) -> Result<()> {
    write_text(path, &cm.to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAMES: [&str; 3] = ["normal", "mild", "severe"];

    #[test]
    fn worked_example() {
        let cm = ConfusionMatrix::from_counts(&NAMES, vec![vec![8, 2, 0], vec![1, 6, 3], vec![0, 4, 6]]).unwrap();
        let r = cm.recalls().unwrap();
        assert_eq!(r, vec![0.8, 0.6, 0.6]);
        assert!((cm.uar().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let truth = [0, 0, 1, 1, 2, 2];
        let e = evaluate(&truth, &truth, &NAMES).unwrap();
        assert_eq!((e.uar, e.accuracy), (1.0, 1.0));
        let e = evaluate(&[1; 6], &truth, &NAMES).unwrap();
        assert!((e.uar - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_row_is_undefined() {
        let cm = ConfusionMatrix::from_counts(&NAMES, vec![vec![1, 0, 0], vec![0, 0, 0], vec![0, 0, 1]]).unwrap();
        assert!(matches!(cm.uar(), Err(PcgError::MetricUndefined(_))));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(evaluate(&[0, 1], &[0], &NAMES), Err(PcgError::InvalidInput(_))));
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let e = evaluate(&[0, 1, 2, 2], &[0, 1, 2, 1], &NAMES).unwrap();
        write_metrics_csv(&dir.path().join("m.csv"), &e).unwrap();
        write_confusion_csv(&dir.path().join("c.csv"), &e.confusion).unwrap();
        let m = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert!(m.starts_with("metric,value\nuar,"));
        let c = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
        assert_eq!(c.lines().next().unwrap(), "truth,normal,mild,severe");
        assert!(format_report(&e).contains("uar"));
    }
}
