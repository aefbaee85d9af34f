//! Minimal reverse-mode gradient engine and the layers the networks use.

mod gradcheck;
mod layers;
mod optim;
mod param;
mod tape;

pub use gradcheck::{check_gradients, relative_error, GradCheck};
pub use layers::{he_uniform, lookup, uniform, Conv1d, Dense, GruCell};
pub use optim::{class_weights, clip_global_norm, sgd_step, Adam};
pub use param::{Gradients, ParamId, ParamStore, Parameter, Tensor};
pub use tape::{softmax, Padding, Tape, Var};
