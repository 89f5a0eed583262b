//! Experiment protocol: training, k-fold evaluation with top-epoch
//! averaging, the metric suite and the modality/fusion ablation grid.

mod config;
mod cv;
mod grid;
mod metrics;
pub mod stubs;
pub mod synthetic;
mod train;

pub use config::{parse_pairs, ExperimentConfig, TopMode};
pub use cv::{aggregate_top_m, corpus_dims, cross_validate, cross_validate_with, top_epochs, CvOutcome, CvReport, FoldReport};
pub use grid::{
    cell_config, parse_subsets, render_table, run_ablation_grid, standard_subsets, write_records, STANDARD_SUBSETS,
};
pub use metrics::{compute_metrics, EvalReport, Metrics};
pub use train::{evaluate, train_one, Classifier, EpochRecord, NetworkClassifier, Sample};

use crate::corpus::FoldError;
use crate::fusion::FusionError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("training failed at epoch {epoch}, batch {batch}: {message}")]
    Training { epoch: usize, batch: usize, message: String },
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: Box<HarnessError> },
    #[error(transparent)]
    Folds(#[from] FoldError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

impl HarnessError {
    /// The error with any fold wrapper removed.
    pub fn root(&self) -> &HarnessError {
        match self {
            HarnessError::Fold { source, .. } => source.root(),
            other => other,
        }
    }
}
