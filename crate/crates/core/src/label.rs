//! Class labels and the two label vocabularies used across the pipeline.

use std::fmt;
use std::str::FromStr;

use crate::error::PcgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Mild,
    Severe,
    Abnormal,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Mild => "mild",
            Label::Severe => "severe",
            Label::Abnormal => "abnormal",
        }
    }

    /// Collapses severity grades onto the binary normal/abnormal task.
    pub fn to_binary(self) -> Label {
        match self {
            Label::Normal => Label::Normal,
            _ => Label::Abnormal,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = PcgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Label::Normal),
            "mild" => Ok(Label::Mild),
            "severe" | "moderate/severe" | "moderate" => Ok(Label::Severe),
            "abnormal" => Ok(Label::Abnormal),
            other => Err(PcgError::InvalidInput(format!("unknown label `{other}`"))),
        }
    }
}

/// Ordered class vocabulary; the position of a label is its class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelSet {
    Binary,
    Severity,
}

impl LabelSet {
    pub fn labels(self) -> &'static [Label] {
        match self {
            LabelSet::Binary => &[Label::Normal, Label::Abnormal],
            LabelSet::Severity => &[Label::Normal, Label::Mild, Label::Severe],
        }
    }

    pub fn len(self) -> usize {
        self.labels().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn index(self, label: Label) -> Option<usize> {
        let label = match self {
            LabelSet::Binary => label.to_binary(),
            LabelSet::Severity => label,
        };
        self.labels().iter().position(|&l| l == label)
    }

    pub fn label(self, index: usize) -> Label {
        self.labels()[index]
    }

    pub fn names(self) -> Vec<&'static str> {
        self.labels().iter().map(|l| l.as_str()).collect()
    }

    pub fn for_classes(n: usize) -> Option<LabelSet> {
        match n {
            2 => Some(LabelSet::Binary),
            3 => Some(LabelSet::Severity),
            _ => None,
        }
    }
}
