use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use super::{EncoderSet, FaceGateResult, FrameSequence, IngestError, Segment};
use crate::{Modality, ModalitySet};

/// Mono audio.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

/// The encoded feature sequences of one sample, keyed by modality.
///
/// A modality is *present* when it has a matrix, even a zero-row one. All
/// values are finite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModalityBundle {
    features: BTreeMap<Modality, Array2<f32>>,
}

impl ModalityBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, modality: Modality, features: Array2<f32>) -> Result<(), IngestError> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(IngestError::Contract(format!("non-finite {modality} feature")));
        }
        self.features.insert(modality, features);
        Ok(())
    }

    /// Builder form of [`insert`](Self::insert) for tests and synthetic data.
    pub fn with(mut self, modality: Modality, features: Array2<f32>) -> Self {
        self.insert(modality, features).expect("finite features");
        self
    }

    pub fn get(&self, modality: Modality) -> Option<ArrayView2<'_, f32>> {
        self.features.get(&modality).map(|a| a.view())
    }

    pub fn present(&self) -> impl Iterator<Item = Modality> + '_ {
        self.features.keys().copied()
    }

    pub fn contains(&self, modality: Modality) -> bool {
        self.features.contains_key(&modality)
    }

    pub fn video(&self) -> Option<ArrayView2<'_, f32>> {
        self.get(Modality::Video)
    }

    pub fn face(&self) -> Option<ArrayView2<'_, f32>> {
        self.get(Modality::Face)
    }

    pub fn audio(&self) -> Option<ArrayView2<'_, f32>> {
        self.get(Modality::Audio)
    }

    pub fn text(&self) -> Option<ArrayView2<'_, f32>> {
        self.get(Modality::Text)
    }

    /// Feature dimension of each present modality.
    pub fn dims(&self) -> BTreeMap<Modality, usize> {
        self.features.iter().map(|(&m, a)| (m, a.ncols())).collect()
    }

    /// Keep only the listed modalities.
    pub fn restrict(&self, modalities: &ModalitySet) -> ModalityBundle {
        Self { features: self.features.iter().filter(|(m, _)| modalities.contains(**m)).map(|(&m, a)| (m, a.clone())).collect() }
    }
}

fn encode_checked(
    encoder: &dyn super::Encoder,
    input: Segment<'_>,
    what: &str,
) -> Result<Array2<f32>, IngestError> {
    let rows = encoder.encode(input)?;
    if rows.ncols() != encoder.output_dim() {
        return Err(IngestError::Contract(format!(
            "{} encoder declared dimension {} but produced {} columns for {what}",
            encoder.modality(),
            encoder.output_dim(),
            rows.ncols()
        )));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(IngestError::Contract(format!("{} encoder produced a non-finite value for {what}", encoder.modality())));
    }
    Ok(rows)
}

fn single_row(rows: Array2<f32>, modality: Modality, frame: usize) -> Result<Array2<f32>, IngestError> {
    if rows.nrows() != 1 {
        return Err(IngestError::Contract(format!("{modality} encoder returned {} rows for frame {frame}", rows.nrows())));
    }
    Ok(rows)
}

/// Encode every requested modality.
///
/// Row `i` of the face matrix is the face encoder applied to crop `i`, or the
/// exact zero vector when frame `i` has no detected face.
pub fn encode_bundle(
    frames: &FrameSequence,
    gate: &FaceGateResult,
    audio: &Waveform,
    transcript: &str,
    encoders: &EncoderSet,
    modalities: &ModalitySet,
) -> Result<ModalityBundle, IngestError> {
    let require = |m: Modality| {
        encoders.get(m).ok_or_else(|| IngestError::Contract(format!("no encoder registered for {m}")))
    };
    let mut bundle = ModalityBundle::new();
    for m in modalities.iter() {
        let encoder = require(m)?;
        let features = match m {
            Modality::Video => {
                let mut z = Array2::zeros((frames.len(), encoder.output_dim()));
                for (i, frame) in frames.frames.iter().enumerate() {
                    let row = single_row(encode_checked(encoder, Segment::Frame(frame), "a frame")?, m, i)?;
                    z.row_mut(i).assign(&row.row(0));
                }
                z
            }
            Modality::Face => {
                if gate.len() != frames.len() {
                    return Err(IngestError::Contract(format!(
                        "face gate covers {} frames, sequence has {}",
                        gate.len(),
                        frames.len()
                    )));
                }
                let mut z = Array2::zeros((frames.len(), encoder.output_dim()));
                for (i, crop) in gate.crops.iter().enumerate() {
                    if let Some(crop) = crop {
                        let row = single_row(encode_checked(encoder, Segment::Frame(crop), "a face crop")?, m, i)?;
                        z.row_mut(i).assign(&row.row(0));
                    }
                }
                z
            }
            Modality::Audio => encode_checked(
                encoder,
                Segment::Audio { samples: &audio.samples, sample_rate: audio.sample_rate },
                "the waveform",
            )?,
            Modality::Text => encode_checked(encoder, Segment::Text(transcript), "the transcript")?,
        };
        bundle.insert(m, features)?;
    }
    Ok(bundle)
}
