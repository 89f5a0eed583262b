use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::Label;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("entry {id:?}: {message}")]
    Validation { id: String, message: String },
    #[error("duplicate entry id {id:?} (lines {first} and {second})")]
    DuplicateId { id: String, first: usize, second: usize },
}

/// The six vulnerable-group tags used to organise the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Community {
    Disabled,
    Women,
    Elderly,
    Children,
    SingleParent,
    LowIncome,
}

/// Inclusive frame interval annotated inside a PCL video.
///
/// Serialized as a two-element array `[start, end]`; the frame rate is the
/// owning entry's `fps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u64; 2]", into = "[u64; 2]")]
pub struct FrameSpan {
    pub start_frame: u64,
    pub end_frame: u64,
}

impl FrameSpan {
    pub fn new(start_frame: u64, end_frame: u64) -> Self {
        Self { start_frame, end_frame }
    }

    pub fn frame_len(&self) -> u64 {
        self.end_frame - self.start_frame + 1
    }

    pub fn duration_s(&self, fps: f64) -> f64 {
        self.frame_len() as f64 / fps
    }
}

impl From<[u64; 2]> for FrameSpan {
    fn from([start_frame, end_frame]: [u64; 2]) -> Self {
        Self { start_frame, end_frame }
    }
}

impl From<FrameSpan> for [u64; 2] {
    fn from(span: FrameSpan) -> Self {
        [span.start_frame, span.end_frame]
    }
}

/// One corpus video.
///
/// Fields not known to this struct are kept in `extra` and written back
/// unchanged by [`write_manifest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub video_path: String,
    pub label: Label,
    #[serde(default)]
    pub spans: Vec<FrameSpan>,
    pub fps: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub transcript: String,
    pub community: Community,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ManifestEntry {
    /// Number of frames in the source video at its native rate.
    pub fn frame_count(&self) -> u64 {
        (self.duration_s * self.fps).round() as u64
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let fail = |message: String| ManifestError::Validation { id: self.id.clone(), message };
        if self.id.is_empty() {
            return Err(fail("empty id".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(fail(format!("fps must be positive, got {}", self.fps)));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(fail(format!("duration_s must be positive, got {}", self.duration_s)));
        }
        if self.label == Label::NonPcl && !self.spans.is_empty() {
            return Err(fail(format!("non-PCL entry carries {} span(s)", self.spans.len())));
        }
        let frames = self.frame_count();
        let mut previous_end: Option<u64> = None;
        for (i, span) in self.spans.iter().enumerate() {
            if span.start_frame > span.end_frame {
                return Err(fail(format!(
                    "span {i} starts after it ends ({} > {})",
                    span.start_frame, span.end_frame
                )));
            }
            if span.end_frame >= frames {
                return Err(fail(format!(
                    "span {i} ends at frame {} but the video has {frames} frames",
                    span.end_frame
                )));
            }
            if let Some(prev) = previous_end {
                if span.start_frame <= prev {
                    return Err(fail(format!("span {i} overlaps or precedes the previous span")));
                }
            }
            previous_end = Some(span.end_frame);
        }
        Ok(())
    }
}

/// Parse manifest text: one JSON object per line, blank lines ignored.
pub fn parse_manifest(reader: impl BufRead) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut entries = Vec::new();
    let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ManifestError::Parse { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line)
            .map_err(|e| ManifestError::Parse { line: line_no, message: e.to_string() })?;
        entry.validate()?;
        if let Some(&first) = seen.get(&entry.id) {
            return Err(ManifestError::DuplicateId { id: entry.id, first, second: line_no });
        }
        seen.insert(entry.id.clone(), line_no);
        entries.push(entry);
    }
    Ok(entries)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>, ManifestError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
    parse_manifest(BufReader::new(file))
}

/// Write entries in manifest format. Entries are validated first so a
/// written manifest always loads back.
pub fn write_manifest(mut out: impl Write, entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    let mut ids = HashSet::new();
    for (i, entry) in entries.iter().enumerate() {
        entry.validate()?;
        if !ids.insert(entry.id.as_str()) {
            return Err(ManifestError::DuplicateId { id: entry.id.clone(), first: 0, second: i + 1 });
        }
    }
    let io_err = |source| ManifestError::Io { path: PathBuf::from("<writer>"), source };
    for entry in entries {
        let line = serde_json::to_string(entry).expect("manifest entries always serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    Ok(())
}
