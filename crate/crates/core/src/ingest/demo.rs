//! A tiny generated corpus in the raw `.pclr` container, for trying the
//! manifest pipeline without real media.

use std::f32::consts::TAU;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::{write_raw_video, Frame, RawVideo};
use crate::corpus::{write_manifest, Community, FrameSpan, ManifestEntry};
use crate::{rng, Label};

const FPS: f64 = 5.0;
const SAMPLE_RATE: u32 = 16_000;

/// Write `count` short videos plus `manifest.jsonl` into `dir` and return
/// the manifest path. Odd-numbered videos are PCL: they show a skin-tone
/// patch (picked up by the colour-key face detector) in their second half,
/// carry a higher audio tone, and have one annotated span.
pub fn write_demo_corpus(dir: &Path, count: usize, seed: u64) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir.join("videos"))?;
    let mut r = rng::stream(seed, "demo-corpus", 0);
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let pcl = i % 2 == 1;
        let seconds = r.gen_range(2..=4);
        let n_frames = seconds * FPS as usize;
        let base = [r.gen_range(20..90), r.gen_range(60..140), r.gen_range(120..200)];
        let frames: Vec<Frame> = (0..n_frames)
            .map(|f| {
                let mut frame = Frame::solid(16, 12, base);
                if pcl && f >= n_frames / 2 {
                    for y in 3..9 {
                        for x in 5..11 {
                            frame.set_pixel(x, y, [224, 172, 105]);
                        }
                    }
                }
                frame
            })
            .collect();
        let tone = if pcl { 660.0 } else { 220.0 };
        let audio = (0..seconds * SAMPLE_RATE as usize)
            .map(|n| 0.3 * (TAU * tone * n as f32 / SAMPLE_RATE as f32).sin() + 0.01 * r.gen_range(-1.0..1.0))
            .collect();
        let name = format!("videos/demo{i:03}.pclr");
        write_raw_video(dir.join(&name), &RawVideo { fps: FPS, frames, sample_rate: SAMPLE_RATE, audio })?;
        let spans = if pcl { vec![FrameSpan::new((n_frames / 2) as u64, n_frames as u64 - 1)] } else { vec![] };
        let transcript = if pcl {
            "poor things, they really cannot manage on their own"
        } else {
            "today we visit the market and buy some vegetables"
        };
        entries.push(ManifestEntry {
            id: format!("demo{i:03}"),
            video_path: name,
            label: Label::from(pcl),
            spans,
            fps: FPS,
            duration_s: seconds as f64,
            transcript: transcript.into(),
            community: if pcl { Community::Disabled } else { Community::Elderly },
            extra: Default::default(),
        });
    }
    let path = dir.join("manifest.jsonl");
    let mut file = std::fs::File::create(&path)?;
    write_manifest(&mut file, &entries).map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(path)
}
