//! Four-branch cycle CNN: pretraining, head transfer, fine-tuning, inference.

mod model;
mod train;

pub use model::{
    transfer_head, Architecture, BranchCnn, FrontEnd, TrainingMeta, BINARY_HEAD, BRANCHES, CONV1_FILTERS,
    CONV2_FILTERS, CONV_KERNEL, DEFAULT_DROPOUT, SEVERITY_HEAD,
};
pub use train::{
    finetune, mean_posterior, predict_recording, pretrain_binary, train, write_metrics_log, EpochMetrics,
    LabeledCycle, Prediction, TrainConfig,
};
