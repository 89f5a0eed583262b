use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub n_coeff: usize,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_mels: usize,
    pub pre_emphasis: f64,
    /// Energies are clamped to this before the log.
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self { sample_rate: 16_000, n_coeff: 13, window_ms: 25.0, hop_ms: 10.0, n_mels: 26, pre_emphasis: 0.97, log_floor: 1e-10 }
    }
}

impl MfccConfig {
    pub fn window_len(&self, sample_rate: u32) -> usize {
        (sample_rate as f64 * self.window_ms / 1000.0).round() as usize
    }

    pub fn hop_len(&self, sample_rate: u32) -> usize {
        (sample_rate as f64 * self.hop_ms / 1000.0).round() as usize
    }

    /// Number of full windows that fit into `samples` samples.
    pub fn frame_count(&self, samples: usize, sample_rate: u32) -> usize {
        let (win, hop) = (self.window_len(sample_rate), self.hop_len(sample_rate));
        if samples < win || win == 0 || hop == 0 {
            0
        } else {
            1 + (samples - win) / hop
        }
    }

    /// MFCC matrix (frames × `n_coeff`) of a mono waveform.
    pub fn compute(&self, waveform: &[f32], sample_rate: u32) -> Result<Array2<f64>, IngestError> {
        if sample_rate == 0 {
            return Err(IngestError::Domain("sample rate must be positive".into()));
        }
        if self.n_coeff == 0 || self.n_coeff > self.n_mels {
            return Err(IngestError::Domain(format!(
                "n_coeff must be in 1..={} (mel bands), got {}",
                self.n_mels, self.n_coeff
            )));
        }
        let win = self.window_len(sample_rate);
        let hop = self.hop_len(sample_rate);
        if win == 0 || hop == 0 {
            return Err(IngestError::Domain("window and hop must span at least one sample".into()));
        }
        if waveform.len() < win {
            return Err(IngestError::Domain(format!(
                "waveform of {} samples is shorter than one {win}-sample window",
                waveform.len()
            )));
        }
        let frames = self.frame_count(waveform.len(), sample_rate);
        let n_fft = win.next_power_of_two();

        let emphasized: Vec<f64> = (0..waveform.len())
            .map(|i| {
                let x = waveform[i] as f64;
                if i == 0 {
                    x
                } else {
                    x - self.pre_emphasis * waveform[i - 1] as f64
                }
            })
            .collect();
        let window: Vec<f64> = if win == 1 {
            vec![1.0]
        } else {
            (0..win).map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (win - 1) as f64).cos()).collect()
        };
        let filters = mel_filterbank(self.n_mels, n_fft, sample_rate as f64);
        let dct = dct_matrix(self.n_coeff, self.n_mels);
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);

        let mut out = Array2::<f64>::zeros((frames, self.n_coeff));
        let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
        let mut log_energies = vec![0.0; self.n_mels];
        for t in 0..frames {
            let start = t * hop;
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (n, w) in window.iter().enumerate() {
                buf[n].re = emphasized[start + n] * w;
            }
            fft.process(&mut buf);
            let power: Vec<f64> = buf[..=n_fft / 2].iter().map(|c| c.norm_sqr() / n_fft as f64).collect();
            for (m, filter) in filters.iter().enumerate() {
                let energy: f64 = filter.iter().map(|&(bin, w)| w * power[bin]).sum();
                log_energies[m] = energy.max(self.log_floor).ln();
            }
            for (k, basis) in dct.iter().enumerate() {
                out[[t, k]] = basis.iter().zip(&log_energies).map(|(b, e)| b * e).sum();
            }
        }
        Ok(out)
    }
}

/// MFCC with the remaining settings at their defaults.
pub fn mfcc(
    waveform: &[f32],
    sample_rate: u32,
    n_coeff: usize,
    window_ms: f64,
    hop_ms: f64,
) -> Result<Array2<f64>, IngestError> {
    MfccConfig { sample_rate, n_coeff, window_ms, hop_ms, ..MfccConfig::default() }.compute(waveform, sample_rate)
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters evenly spaced on the mel scale from 0 Hz to Nyquist,
/// stored sparsely as `(bin, weight)` lists.
fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: f64) -> Vec<Vec<(usize, f64)>> {
    let bins = n_fft / 2 + 1;
    let top = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64) * n_fft as f64 / sample_rate)
        .collect();
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .filter_map(|b| {
                    let f = b as f64;
                    let w = if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((b, w))
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis rows, truncated to `n_out` coefficients.
fn dct_matrix(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    let n = n_in as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            (0..n_in).map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()).collect()
        })
        .collect()
}
