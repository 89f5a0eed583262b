use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use super::IngestError;
use crate::corpus::ManifestEntry;

/// An 8-bit RGB image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl Frame {
    pub const CHANNELS: usize = 3;

    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize * Self::CHANNELS, "frame buffer size");
        Self { width, height, data }
    }

    pub fn solid(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, data }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copy of the rectangle `[x, x+w) × [y, y+h)`; caller guarantees bounds.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Frame {
        let mut data = Vec::with_capacity(w as usize * h as usize * 3);
        for row in y..y + h {
            let start = (row as usize * self.width as usize + x as usize) * 3;
            data.extend_from_slice(&self.data[start..start + w as usize * 3]);
        }
        Frame { width: w, height: h, data }
    }

    /// Per-channel mean in `[0, 1]`.
    pub fn channel_means(&self) -> [f64; 3] {
        let mut sums = [0u64; 3];
        for px in self.data.chunks_exact(3) {
            for c in 0..3 {
                sums[c] += px[c] as u64;
            }
        }
        let n = (self.data.len() / 3).max(1) as f64;
        sums.map(|s| s as f64 / n / 255.0)
    }
}

/// Frames sampled from one video.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    /// Rate the frames were actually sampled at.
    pub source_fps: f64,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediaInfo {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
}

pub type FrameStream<'a> = Box<dyn Iterator<Item = Result<Frame, String>> + 'a>;

/// Narrow adapter over whatever decodes the container format.
pub trait MediaSource: Send + Sync {
    /// Stream every frame at the native rate.
    fn open_video(&self, path: &Path) -> Result<(MediaInfo, FrameStream<'_>), String>;

    /// Mono samples resampled to `sample_rate`.
    fn read_audio(&self, path: &Path, sample_rate: u32) -> Result<Vec<f32>, String>;
}

/// Source frame indices for uniform sampling at `effective_fps` out of a
/// stream at `native_fps`, capped at `max_frames`.
pub fn sample_indices(native_fps: f64, effective_fps: f64, frame_count: u64, max_frames: usize) -> Vec<u64> {
    let step = native_fps / effective_fps;
    (0..)
        .map(|k: u64| (k as f64 * step + 1e-9).floor() as u64)
        .take_while(|&i| i < frame_count)
        .take(max_frames)
        .collect()
}

/// Sample frames uniformly at `target_fps` (never faster than the source),
/// keeping at most `max_frames`.
pub fn extract_frames(
    entry: &ManifestEntry,
    media_root: &Path,
    source: &dyn MediaSource,
    target_fps: f64,
    max_frames: usize,
) -> Result<FrameSequence, IngestError> {
    if !(target_fps.is_finite() && target_fps > 0.0) {
        return Err(IngestError::Domain(format!("target_fps must be positive, got {target_fps}")));
    }
    let media_err = |message: String| IngestError::Media { id: entry.id.clone(), message };
    let path = media_root.join(&entry.video_path);
    let (info, stream) = source.open_video(&path).map_err(media_err)?;
    if !(info.fps.is_finite() && info.fps > 0.0) {
        return Err(media_err(format!("invalid native frame rate {}", info.fps)));
    }
    let effective = target_fps.min(info.fps);
    let step = info.fps / effective;
    let mut frames = Vec::new();
    let mut next_wanted = 0u64;
    for (i, frame) in stream.enumerate() {
        if frames.len() >= max_frames {
            break;
        }
        let frame = frame.map_err(media_err)?;
        if i as u64 == next_wanted {
            if let Some(first) = frames.first() {
                let first: &Frame = first;
                if (first.width, first.height) != (frame.width, frame.height) {
                    return Err(media_err(format!("frame {i} changes dimensions")));
                }
            }
            frames.push(frame);
            next_wanted = ((frames.len() as f64) * step + 1e-9).floor() as u64;
        }
    }
    if frames.is_empty() {
        return Err(IngestError::NoFrames { id: entry.id.clone() });
    }
    Ok(FrameSequence { frames, source_fps: effective })
}

const RAW_MAGIC: &[u8; 4] = b"PCLR";
const RAW_VERSION: u8 = 1;

/// Uncompressed video + audio container used for fixtures and synthetic
/// corpora (`.pclr`).
///
/// Layout, little-endian: `"PCLR"`, version byte, width u32, height u32,
/// fps f64, frame count u32, sample rate u32, sample count u32, then the RGB
/// frames back to back, then the f32 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RawVideo {
    pub fps: f64,
    pub frames: Vec<Frame>,
    pub sample_rate: u32,
    pub audio: Vec<f32>,
}

pub fn write_raw_video(path: impl AsRef<Path>, video: &RawVideo) -> std::io::Result<()> {
    let (w, h) = video.frames.first().map_or((0, 0), |f| (f.width, f.height));
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    out.write_all(RAW_MAGIC)?;
    out.write_all(&[RAW_VERSION])?;
    out.write_all(&w.to_le_bytes())?;
    out.write_all(&h.to_le_bytes())?;
    out.write_all(&video.fps.to_le_bytes())?;
    out.write_all(&(video.frames.len() as u32).to_le_bytes())?;
    out.write_all(&video.sample_rate.to_le_bytes())?;
    out.write_all(&(video.audio.len() as u32).to_le_bytes())?;
    for f in &video.frames {
        if (f.width, f.height) != (w, h) {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "frames differ in size"));
        }
        out.write_all(&f.data)?;
    }
    for s in &video.audio {
        out.write_all(&s.to_le_bytes())?;
    }
    out.flush()
}

struct RawHeader {
    info: MediaInfo,
    frame_count: u32,
    sample_rate: u32,
    samples: u32,
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_raw_header(r: &mut impl Read) -> Result<RawHeader, String> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(|e| format!("header: {e}"))?;
    if &magic[..4] != RAW_MAGIC || magic[4] != RAW_VERSION {
        return Err("not a PCLR v1 file".into());
    }
    let err = |e: std::io::Error| format!("header: {e}");
    let width = read_u32(r).map_err(err)?;
    let height = read_u32(r).map_err(err)?;
    let mut fps = [0u8; 8];
    r.read_exact(&mut fps).map_err(err)?;
    let frame_count = read_u32(r).map_err(err)?;
    let sample_rate = read_u32(r).map_err(err)?;
    let samples = read_u32(r).map_err(err)?;
    Ok(RawHeader { info: MediaInfo { fps: f64::from_le_bytes(fps), width, height }, frame_count, sample_rate, samples })
}

/// Reader for the `.pclr` container.
#[derive(Debug, Default, Clone, Copy)]
pub struct RawMediaSource;

impl MediaSource for RawMediaSource {
    fn open_video(&self, path: &Path) -> Result<(MediaInfo, FrameStream<'_>), String> {
        let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut reader = BufReader::new(file);
        let header = read_raw_header(&mut reader)?;
        let (w, h) = (header.info.width, header.info.height);
        let frame_bytes = w as usize * h as usize * 3;
        let stream = (0..header.frame_count).map(move |i| {
            let mut data = vec![0u8; frame_bytes];
            reader.read_exact(&mut data).map_err(|e| format!("frame {i}: {e}"))?;
            Ok(Frame { width: w, height: h, data })
        });
        Ok((header.info, Box::new(stream)))
    }

    fn read_audio(&self, path: &Path, sample_rate: u32) -> Result<Vec<f32>, String> {
        let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cursor = bytes.as_slice();
        let header = read_raw_header(&mut cursor)?;
        let video_bytes =
            header.frame_count as usize * header.info.width as usize * header.info.height as usize * 3;
        let audio = cursor.get(video_bytes..).ok_or("truncated video payload")?;
        let need = header.samples as usize * 4;
        if audio.len() < need {
            return Err("truncated audio payload".into());
        }
        let samples: Vec<f32> =
            audio[..need].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        if header.sample_rate == sample_rate || samples.is_empty() {
            return Ok(samples);
        }
        Ok(resample_linear(&samples, header.sample_rate, sample_rate))
    }
}

fn resample_linear(samples: &[f32], from: u32, to: u32) -> Vec<f32> {
    let out_len = (samples.len() as u64 * to as u64 / from as u64) as usize;
    let ratio = from as f64 / to as f64;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let j = pos.floor() as usize;
            let frac = (pos - j as f64) as f32;
            let a = samples[j.min(samples.len() - 1)];
            let b = samples[(j + 1).min(samples.len() - 1)];
            a + (b - a) * frac
        })
        .collect()
}

/// Decodes arbitrary containers by piping raw frames / PCM out of the
/// `ffmpeg` and `ffprobe` executables.
#[derive(Debug, Clone)]
pub struct FfmpegSource {
    pub ffmpeg: PathBuf,
    pub ffprobe: PathBuf,
}

impl Default for FfmpegSource {
    fn default() -> Self {
        Self { ffmpeg: "ffmpeg".into(), ffprobe: "ffprobe".into() }
    }
}

impl FfmpegSource {
    fn probe(&self, path: &Path) -> Result<MediaInfo, String> {
        let out = Command::new(&self.ffprobe)
            .args(["-v", "error", "-select_streams", "v:0", "-show_entries", "stream=width,height,r_frame_rate"])
            .args(["-of", "csv=p=0"])
            .arg(path)
            .output()
            .map_err(|e| format!("cannot run {}: {e}", self.ffprobe.display()))?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).trim().to_string());
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let fields: Vec<&str> = text.trim().split(',').collect();
        let [w, h, rate] = fields.as_slice() else {
            return Err(format!("unexpected ffprobe output {text:?}"));
        };
        let fps = match rate.split_once('/') {
            Some((n, d)) => n.parse::<f64>().ok().zip(d.parse::<f64>().ok()).map(|(n, d)| n / d),
            None => rate.parse().ok(),
        }
        .ok_or_else(|| format!("bad frame rate {rate:?}"))?;
        Ok(MediaInfo {
            fps,
            width: w.parse().map_err(|_| format!("bad width {w:?}"))?,
            height: h.parse().map_err(|_| format!("bad height {h:?}"))?,
        })
    }
}

struct FfmpegFrames {
    child: Child,
    frame_bytes: usize,
    width: u32,
    height: u32,
}

impl Iterator for FfmpegFrames {
    type Item = Result<Frame, String>;

    fn next(&mut self) -> Option<Self::Item> {
        let stdout = self.child.stdout.as_mut()?;
        let mut data = vec![0u8; self.frame_bytes];
        match stdout.read_exact(&mut data) {
            Ok(()) => Some(Ok(Frame { width: self.width, height: self.height, data })),
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => None,
            Err(e) => Some(Err(e.to_string())),
        }
    }
}

impl Drop for FfmpegFrames {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl MediaSource for FfmpegSource {
    fn open_video(&self, path: &Path) -> Result<(MediaInfo, FrameStream<'_>), String> {
        let info = self.probe(path)?;
        let child = Command::new(&self.ffmpeg)
            .args(["-v", "error", "-i"])
            .arg(path)
            .args(["-f", "rawvideo", "-pix_fmt", "rgb24", "-"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot run {}: {e}", self.ffmpeg.display()))?;
        let frames = FfmpegFrames {
            child,
            frame_bytes: info.width as usize * info.height as usize * 3,
            width: info.width,
            height: info.height,
        };
        Ok((info, Box::new(frames)))
    }

    fn read_audio(&self, path: &Path, sample_rate: u32) -> Result<Vec<f32>, String> {
        let out = Command::new(&self.ffmpeg)
            .args(["-v", "error", "-i"])
            .arg(path)
            .args(["-vn", "-ac", "1", "-ar", &sample_rate.to_string(), "-f", "f32le", "-"])
            .output()
            .map_err(|e| format!("cannot run {}: {e}", self.ffmpeg.display()))?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).trim().to_string());
        }
        Ok(out.stdout.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    }
}

/// `.pclr` files go to [`RawMediaSource`], everything else to ffmpeg.
#[derive(Debug, Clone, Default)]
pub struct AutoSource {
    pub raw: RawMediaSource,
    pub ffmpeg: FfmpegSource,
}

impl AutoSource {
    fn pick(&self, path: &Path) -> &dyn MediaSource {
        if path.extension().is_some_and(|e| e == "pclr") {
            &self.raw
        } else {
            &self.ffmpeg
        }
    }
}

impl MediaSource for AutoSource {
    fn open_video(&self, path: &Path) -> Result<(MediaInfo, FrameStream<'_>), String> {
        self.pick(path).open_video(path)
    }

    fn read_audio(&self, path: &Path, sample_rate: u32) -> Result<Vec<f32>, String> {
        self.pick(path).read_audio(path, sample_rate)
    }
}
