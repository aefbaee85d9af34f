pub mod acoustic;
pub mod autoencoder;
pub mod config;
pub mod container;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod label;
pub mod nn;
pub mod pcgnet;
pub mod pipeline;
pub mod segmentation;
pub mod shallow;
pub mod tconv;

pub use error::{PcgError, Result};
pub use label::{Label, LabelSet};
