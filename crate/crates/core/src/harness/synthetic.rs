//! Generated corpora with known structure.
//!
//! `separable` shifts the mean of every modality by the label. `agreement`
//! makes the label depend only on whether the video and text signs agree,
//! so no single modality carries any information about it.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{HarnessError, Sample};
use crate::ingest::ModalityBundle;
use crate::{rng, Label, Modality};

/// Feature widths of generated bundles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticDims {
    pub video: usize,
    pub face: usize,
    pub audio: usize,
    pub text: usize,
}

impl Default for SyntheticDims {
    fn default() -> Self {
        Self { video: 8, face: 8, audio: 13, text: 8 }
    }
}

impl SyntheticDims {
    fn get(&self, m: Modality) -> usize {
        match m {
            Modality::Video => self.video,
            Modality::Face => self.face,
            Modality::Audio => self.audio,
            Modality::Text => self.text,
        }
    }
}

/// Fixed ±1 direction per modality.
fn direction(seed: u64, m: Modality, dim: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, "synthetic-direction", m.index() as u64);
    (0..dim).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn rows(r: &mut ChaCha8Rng, n: usize, dim: usize, mean: impl Fn(usize, usize) -> f64, noise: f64) -> Array2<f32> {
    let normal = Normal::new(0.0, noise).expect("valid noise scale");
    Array2::from_shape_fn((n, dim), |(i, j)| (mean(i, j) + normal.sample(r)) as f32)
}

fn check_size(n: usize, min: usize) -> Result<(), HarnessError> {
    if n < min {
        return Err(HarnessError::Config(format!("synthetic corpus needs at least {min} items, got {n}")));
    }
    Ok(())
}

/// `n` items, half PCL. Every row of every modality is `±1` times a fixed
/// direction plus Gaussian noise with standard deviation `noise`, with the
/// sign given by the label. About a quarter of the face rows are exact
/// zeros, as if no face had been found.
pub fn separable(n: usize, seed: u64, dims: SyntheticDims, noise: f64) -> Result<Vec<Sample>, HarnessError> {
    check_size(n, 2)?;
    let mut r = rng::stream(seed, "synthetic-separable", 0);
    let mut labels: Vec<Label> = (0..n).map(|i| Label::from(i < n / 2)).collect();
    labels.shuffle(&mut r);
    let dirs: Vec<Vec<f64>> = Modality::ALL.iter().map(|&m| direction(seed, m, dims.get(m))).collect();
    let mut out = Vec::with_capacity(n);
    for (i, &label) in labels.iter().enumerate() {
        let sign = if label.is_positive() { 1.0 } else { -1.0 };
        let frames = r.gen_range(2..=4);
        let mut bundle = ModalityBundle::new();
        for m in Modality::ALL {
            let len = match m {
                Modality::Video | Modality::Face => frames,
                Modality::Audio => r.gen_range(3..=6),
                Modality::Text => 1,
            };
            let d = &dirs[m.index()];
            let mut x = rows(&mut r, len, dims.get(m), |_, j| sign * d[j], noise);
            if m == Modality::Face {
                for mut row in x.rows_mut() {
                    if r.gen::<f64>() < 0.25 {
                        row.fill(0.0);
                    }
                }
            }
            bundle.insert(m, x).expect("finite features");
        }
        out.push(Sample { id: format!("sep-{i:04}"), label, bundle });
    }
    Ok(out)
}

/// Hidden signs of one agreement item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signs {
    pub video: i8,
    pub text: i8,
}

/// `n` items (a multiple of 6) of which one third are PCL. Each item draws
/// a video sign and a text sign; it is PCL exactly when they agree. Both
/// signs are balanced within each class, so each sign alone is independent
/// of the label.
///
/// Video rows are `video_sign` times a fixed direction. Text carries two
/// rows, `text_sign * u + w` and its negation, so the pooled text mean is
/// zero and only attention between the two modalities can read the
/// product of the signs. Audio and face rows are label-free noise.
pub fn agreement(n: usize, seed: u64, dims: SyntheticDims, noise: f64) -> Result<(Vec<Sample>, Vec<Signs>), HarnessError> {
    check_size(n, 6)?;
    if !n.is_multiple_of(6) {
        return Err(HarnessError::Config(format!("agreement corpus size must be a multiple of 6, got {n}")));
    }
    let mut r = rng::stream(seed, "synthetic-agreement", 0);
    let k = n / 6;
    let mut signs: Vec<Signs> = [(1, 1, k), (-1, -1, k), (1, -1, 2 * k), (-1, 1, 2 * k)]
        .iter()
        .flat_map(|&(v, t, c)| std::iter::repeat_n(Signs { video: v, text: t }, c))
        .collect();
    signs.shuffle(&mut r);
    let video_dir = direction(seed, Modality::Video, dims.video);
    let text_dir = direction(seed, Modality::Text, dims.text);
    let text_marker = {
        let mut m = rng::stream(seed, "synthetic-marker", 0);
        (0..dims.text).map(|_| if m.gen::<bool>() { 1.0 } else { -1.0 }).collect::<Vec<f64>>()
    };
    let mut out = Vec::with_capacity(n);
    for (i, s) in signs.iter().enumerate() {
        let (sv, st) = (s.video as f64, s.text as f64);
        let frames = r.gen_range(2..=4);
        let video = rows(&mut r, frames, dims.video, |_, j| sv * video_dir[j], noise);
        let text = rows(
            &mut r,
            2,
            dims.text,
            |row, j| {
                let base = 0.5 * (st * text_dir[j] + text_marker[j]);
                if row == 0 {
                    base
                } else {
                    -base
                }
            },
            noise,
        );
        let audio_len = r.gen_range(3..=6);
        let audio = rows(&mut r, audio_len, dims.audio, |_, _| 0.0, 1.0);
        let face = rows(&mut r, frames, dims.face, |_, _| 0.0, 1.0);
        let bundle = ModalityBundle::new()
            .with(Modality::Video, video)
            .with(Modality::Text, text)
            .with(Modality::Audio, audio)
            .with(Modality::Face, face);
        out.push(Sample { id: format!("agr-{i:04}"), label: Label::from(s.video == s.text), bundle });
    }
    Ok((out, signs))
}
