use ndarray::Array2;
use rand::Rng;

use super::{Frame, IngestError, MfccConfig};
use crate::{rng, Modality};

/// Raw input handed to an encoder.
#[derive(Debug, Clone, Copy)]
pub enum Segment<'a> {
    Frame(&'a Frame),
    Audio { samples: &'a [f32], sample_rate: u32 },
    Text(&'a str),
}

/// Adapter seam for a per-modality feature extractor.
///
/// Frame encoders (video, face) must return exactly one row per call; audio
/// and text encoders may return any number of rows. Every row has
/// `output_dim()` columns for the encoder's whole lifetime.
pub trait Encoder: Send + Sync {
    fn modality(&self) -> Modality;
    fn output_dim(&self) -> usize;
    fn encode(&self, input: Segment<'_>) -> Result<Array2<f32>, IngestError>;

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// One optional encoder per modality.
#[derive(Default)]
pub struct EncoderSet {
    pub video: Option<Box<dyn Encoder>>,
    pub face: Option<Box<dyn Encoder>>,
    pub audio: Option<Box<dyn Encoder>>,
    pub text: Option<Box<dyn Encoder>>,
}

impl EncoderSet {
    /// The shipped toy encoders: channel-mean projections for video and face,
    /// MFCC for audio, hashed bag-of-characters for text.
    pub fn toy(video_dim: usize, face_dim: usize, text_dim: usize, seed: u64) -> Self {
        Self {
            video: Some(Box::new(ChannelMeanEncoder::projected(Modality::Video, video_dim, seed))),
            face: Some(Box::new(ChannelMeanEncoder::projected(Modality::Face, face_dim, seed))),
            audio: Some(Box::new(MfccEncoder::default())),
            text: Some(Box::new(HashedCharEncoder::new(text_dim))),
        }
    }

    pub fn get(&self, m: Modality) -> Option<&dyn Encoder> {
        match m {
            Modality::Video => self.video.as_deref(),
            Modality::Face => self.face.as_deref(),
            Modality::Audio => self.audio.as_deref(),
            Modality::Text => self.text.as_deref(),
        }
    }
}

/// Per-frame mean colour, optionally pushed through a fixed random
/// projection to `dim` features.
#[derive(Debug, Clone)]
pub struct ChannelMeanEncoder {
    modality: Modality,
    projection: Option<Array2<f64>>,
}

impl ChannelMeanEncoder {
    /// Output is the raw `[r, g, b]` mean in `[0, 1]`.
    pub fn identity(modality: Modality) -> Self {
        Self { modality, projection: None }
    }

    pub fn projected(modality: Modality, dim: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "channel-mean-projection", modality.index() as u64);
        let projection = Array2::from_shape_fn((3, dim), |_| rng.gen_range(-1.0..1.0));
        Self { modality, projection: Some(projection) }
    }
}

impl Encoder for ChannelMeanEncoder {
    fn modality(&self) -> Modality {
        self.modality
    }

    fn output_dim(&self) -> usize {
        self.projection.as_ref().map_or(3, |p| p.ncols())
    }

    fn encode(&self, input: Segment<'_>) -> Result<Array2<f32>, IngestError> {
        let Segment::Frame(frame) = input else {
            return Err(IngestError::Contract(format!("{} encoder expects frames", self.modality)));
        };
        let means = ndarray::Array1::from(frame.channel_means().to_vec());
        let row = match &self.projection {
            Some(p) => means.dot(p),
            None => means,
        };
        Ok(row.mapv(|v| v as f32).insert_axis(ndarray::Axis(0)))
    }
}

/// MFCC features, one row per analysis window.
#[derive(Debug, Clone, Default)]
pub struct MfccEncoder {
    pub config: MfccConfig,
}

impl Encoder for MfccEncoder {
    fn modality(&self) -> Modality {
        Modality::Audio
    }

    fn output_dim(&self) -> usize {
        self.config.n_coeff
    }

    fn encode(&self, input: Segment<'_>) -> Result<Array2<f32>, IngestError> {
        let Segment::Audio { samples, sample_rate } = input else {
            return Err(IngestError::Contract("audio encoder expects a waveform".into()));
        };
        Ok(self.config.compute(samples, sample_rate)?.mapv(|v| v as f32))
    }
}

/// A single "CLS" row: character counts hashed into `dim` buckets,
/// normalised by transcript length. An empty transcript gives a zero row.
#[derive(Debug, Clone)]
pub struct HashedCharEncoder {
    dim: usize,
}

impl HashedCharEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "text feature dimension must be positive");
        Self { dim }
    }
}

impl Encoder for HashedCharEncoder {
    fn modality(&self) -> Modality {
        Modality::Text
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, input: Segment<'_>) -> Result<Array2<f32>, IngestError> {
        let Segment::Text(text) = input else {
            return Err(IngestError::Contract("text encoder expects a transcript".into()));
        };
        let mut row = Array2::<f32>::zeros((1, self.dim));
        let mut n = 0usize;
        let mut buf = [0u8; 4];
        for c in text.chars() {
            let bucket = rng::fnv1a(c.encode_utf8(&mut buf).as_bytes()) % self.dim as u64;
            row[[0, bucket as usize]] += 1.0;
            n += 1;
        }
        if n > 0 {
            row.mapv_inplace(|v| v / n as f32);
        }
        Ok(row)
    }
}
