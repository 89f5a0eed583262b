use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    encode_bundle, extract_frames, gate_faces, EncoderSet, FaceDetector, FaceGateResult, IngestError, MediaSource,
    ModalityBundle, Waveform,
};
use crate::corpus::ManifestEntry;
use crate::{Modality, ModalitySet};

/// Speech-to-text seam. No recogniser is bundled; transcripts normally come
/// from the manifest.
pub trait Transcriber: Send + Sync {
    fn transcribe(&self, audio: &Waveform) -> Result<String, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub target_fps: f64,
    pub max_frames: usize,
    pub sample_rate: u32,
    pub modalities: ModalitySet,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { target_fps: 1.0, max_frames: 256, sample_rate: 16_000, modalities: ModalitySet::all() }
    }
}

/// Full per-entry pipeline: frames, face gate, audio, transcript, encoders.
pub fn ingest_entry(
    entry: &ManifestEntry,
    media_root: &Path,
    source: &dyn MediaSource,
    detector: &dyn FaceDetector,
    encoders: &EncoderSet,
    transcriber: Option<&dyn Transcriber>,
    options: &IngestOptions,
) -> Result<ModalityBundle, IngestError> {
    let frames = extract_frames(entry, media_root, source, options.target_fps, options.max_frames)?;
    let gate = if options.modalities.contains(Modality::Face) {
        gate_faces(&frames, detector)
    } else {
        FaceGateResult::none(frames.len())
    };
    let needs_audio = options.modalities.contains(Modality::Audio) || (entry.transcript.is_empty() && transcriber.is_some());
    let audio = if needs_audio {
        let samples = source
            .read_audio(&media_root.join(&entry.video_path), options.sample_rate)
            .map_err(|message| IngestError::Media { id: entry.id.clone(), message })?;
        Waveform { samples, sample_rate: options.sample_rate }
    } else {
        Waveform::default()
    };
    let transcript = match transcriber {
        Some(t) if entry.transcript.is_empty() => {
            t.transcribe(&audio).map_err(|message| IngestError::Media { id: entry.id.clone(), message })?
        }
        _ => entry.transcript.clone(),
    };
    log::debug!("{}: {} frames, {} with faces", entry.id, frames.len(), gate.detected());
    encode_bundle(&frames, &gate, &audio, &transcript, encoders, &options.modalities)
}
