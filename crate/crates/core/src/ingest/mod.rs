//! Per-modality feature extraction.
//!
//! A [`ManifestEntry`](crate::corpus::ManifestEntry) becomes a
//! [`ModalityBundle`] in four steps: sample frames from the video, gate each
//! frame through a face detector (frames without a face get an exact zero
//! feature row), compute MFCC audio features, and encode the transcript.
//! Media decoding, face detection and the per-modality encoders are traits so
//! pretrained models can be plugged in; the crate ships deterministic toy
//! implementations of each.

mod bundle;
mod cache;
mod demo;
mod encoders;
mod faces;
mod frames;
mod mfcc;
mod pipeline;

use thiserror::Error;

pub use bundle::{encode_bundle, ModalityBundle, Waveform};
pub use cache::{cache_bundle, decode_bundle, encode_bundle_bytes, load_cached, CACHE_MAGIC, CACHE_VERSION};
pub(crate) use cache::{
    read_matrix_section as cache_read_matrix, write_atomic as write_file_atomic, write_matrix_section as cache_write_matrix,
};
pub use encoders::{ChannelMeanEncoder, Encoder, EncoderSet, HashedCharEncoder, MfccEncoder, Segment};
pub use faces::{gate_faces, BoundingBox, ColorKeyDetector, FaceDetector, FaceGateResult};
pub use frames::{
    extract_frames, sample_indices, write_raw_video, FfmpegSource, Frame, FrameSequence, MediaInfo, MediaSource,
    RawMediaSource, RawVideo, AutoSource,
};
pub use demo::write_demo_corpus;
pub use mfcc::{mfcc, MfccConfig};
pub use pipeline::{ingest_entry, IngestOptions, Transcriber};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("entry {id:?}: cannot decode media: {message}")]
    Media { id: String, message: String },
    #[error("entry {id:?}: no decodable frames")]
    NoFrames { id: String },
    #[error("encoder contract violated: {0}")]
    Contract(String),
    #[error("{0}")]
    Domain(String),
    #[error("feature cache {section}: {message}")]
    Cache { section: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}
