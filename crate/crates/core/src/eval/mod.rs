//! Evaluation metrics, majority voting and the two-stage decision.

mod ensemble;
mod metrics;

pub use ensemble::{hierarchical_decide, majority_vote, NormalVotePolicy, VoterOutput};
pub use metrics::{evaluate, format_report, write_confusion_csv, write_metrics_csv, ConfusionMatrix, Evaluation};
