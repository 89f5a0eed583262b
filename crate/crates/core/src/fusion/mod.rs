//! Pairwise cross-modality attention fusion.
//!
//! Each modality's feature sequence is projected to a shared model width.
//! For every ordered modality pair `(i, j)` in the configured pair set, a
//! multi-head attention block lets modality `i` query modality `j`; each
//! attended sequence is mean-pooled over its query positions and the pooled
//! vectors are summed into one representation, which a linear head maps to a
//! logit. Gradients are derived by hand and checked against finite
//! differences in the test suite.

mod attention;
mod baseline;
mod checkpoint;
mod config;
mod linear;
mod loss;
mod model;
mod network;
mod optim;

use thiserror::Error;

pub use attention::{mhca, softmax_rows, AttentionBlock, MhcaOutput};
pub use baseline::{fc_fusion_baseline, FcModel};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use config::{FusionConfig, FusionVariant, Pair};
pub use linear::Linear;
pub use loss::{bce_with_logits, sigmoid, softplus};
pub use model::{fuse, FusionModel, FusionOutput, PairOutput};
pub use network::{FusionNet, Network};
pub use optim::Adam;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("invalid fusion configuration: {0}")]
    Config(String),
    #[error("attention contract violated: {0}")]
    Contract(String),
    #[error("{0}")]
    Domain(String),
    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
