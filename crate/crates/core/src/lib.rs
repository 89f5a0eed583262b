//! Multimodal video classification toolkit.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] loads and validates line-delimited video manifests, summarises
//!   them, measures annotator agreement and builds stratified folds.
//! * [`ingest`] turns a manifest entry into a [`ingest::ModalityBundle`]: frame
//!   sampling, face gating with zero-vector fill, MFCC audio features, transcript
//!   encoding and a binary feature cache.
//! * [`fusion`] is the classifier: pairwise cross-modality multi-head attention
//!   over the four feature sequences, sum aggregation, a logit head, the
//!   binary cross-entropy objective and hand-written gradients.
//! * [`harness`] runs the experimental protocol: k-fold cross-validation,
//!   top-m epoch averaging, the positive-class metric suite and modality /
//!   fusion-variant ablation grids.
//! * [`cli`] wires everything into the `multipcl` binary.

pub mod cli;
pub mod corpus;
pub mod fusion;
pub mod harness;
pub mod ingest;
mod modality;
pub mod rng;

pub use modality::{Label, Modality, ModalitySet, ParseModalityError};
