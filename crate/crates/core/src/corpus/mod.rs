//! PCLMM-schema corpora: manifests, summary statistics, annotator agreement
//! and stratified folds.

mod folds;
mod kappa;
mod manifest;
mod stats;

pub use folds::{make_folds, stratified_folds, Fold, FoldError};
pub use kappa::{fleiss_kappa, load_annotations, AnnotationMatrix, KappaError};
pub use manifest::{
    load_manifest, parse_manifest, write_manifest, Community, FrameSpan, ManifestEntry, ManifestError,
};
pub use stats::{compute_stats, ClassStats, CorpusStats, SpanStats, StatsError};
