use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ManifestEntry;
use crate::Label;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("cannot compute statistics of an empty corpus")]
    Empty,
}

/// Totals and means for one group of videos.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub count: usize,
    pub duration_hours: f64,
    /// Sum of `duration_s * fps`.
    pub frames: f64,
    pub mean_video_minutes: f64,
    /// Transcript length in Unicode scalar values.
    pub mean_transcript_chars: f64,
}

/// Annotated PCL frame spans, aggregated over label-1 entries only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanStats {
    pub count: usize,
    pub duration_hours: f64,
    pub frames: u64,
    /// Mean length of a single span.
    pub mean_span_minutes: f64,
    /// Mean total span time per PCL video.
    pub mean_minutes_per_pcl_video: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub non_pcl: ClassStats,
    pub pcl: ClassStats,
    pub total: ClassStats,
    pub spans: SpanStats,
}

#[derive(Default)]
struct Accumulator {
    count: usize,
    seconds: f64,
    frames: f64,
    chars: usize,
}

impl Accumulator {
    fn add(&mut self, e: &ManifestEntry) {
        self.count += 1;
        self.seconds += e.duration_s;
        self.frames += e.duration_s * e.fps;
        self.chars += e.transcript.chars().count();
    }

    fn finish(&self) -> ClassStats {
        let n = self.count.max(1) as f64;
        ClassStats {
            count: self.count,
            duration_hours: self.seconds / 3600.0,
            frames: self.frames,
            mean_video_minutes: if self.count == 0 { 0.0 } else { self.seconds / 60.0 / n },
            mean_transcript_chars: if self.count == 0 { 0.0 } else { self.chars as f64 / n },
        }
    }
}

pub fn compute_stats(entries: &[ManifestEntry]) -> Result<CorpusStats, StatsError> {
    if entries.is_empty() {
        return Err(StatsError::Empty);
    }
    let (mut neg, mut pos, mut all) = (Accumulator::default(), Accumulator::default(), Accumulator::default());
    let mut span_count = 0usize;
    let mut span_seconds = 0.0;
    let mut span_frames = 0u64;
    for e in entries {
        all.add(e);
        match e.label {
            Label::NonPcl => neg.add(e),
            Label::Pcl => {
                pos.add(e);
                span_count += e.spans.len();
                for s in &e.spans {
                    span_frames += s.frame_len();
                    span_seconds += s.duration_s(e.fps);
                }
            }
        }
    }
    let spans = SpanStats {
        count: span_count,
        duration_hours: span_seconds / 3600.0,
        frames: span_frames,
        mean_span_minutes: if span_count == 0 { 0.0 } else { span_seconds / 60.0 / span_count as f64 },
        mean_minutes_per_pcl_video: if pos.count == 0 { 0.0 } else { span_seconds / 60.0 / pos.count as f64 },
    };
    Ok(CorpusStats { non_pcl: neg.finish(), pcl: pos.finish(), total: all.finish(), spans })
}

impl fmt::Display for CorpusStats {
    /// Renders the summary in the column layout Non-PCL | PCL | Spans | Total.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, p, s, t) = (&self.non_pcl, &self.pcl, &self.spans, &self.total);
        writeln!(f, "{:<26}{:>10}{:>10}{:>10}{:>10}", "", "Non-PCL", "PCL", "Spans", "Total")?;
        writeln!(f, "{:<26}{:>10}{:>10}{:>10}{:>10}", "Total num", n.count, p.count, s.count, t.count)?;
        writeln!(
            f,
            "{:<26}{:>10.1}{:>10.1}{:>10.1}{:>10.1}",
            "Total len (hrs)", n.duration_hours, p.duration_hours, s.duration_hours, t.duration_hours
        )?;
        writeln!(
            f,
            "{:<26}{:>10.1}{:>10.1}{:>10.1}{:>10.1}",
            "Total frame (M)",
            n.frames / 1e6,
            p.frames / 1e6,
            s.frames as f64 / 1e6,
            t.frames / 1e6
        )?;
        writeln!(
            f,
            "{:<26}{:>10.1}{:>10.1}{:>10.1}{:>10.1}",
            "Mean video len (min)", n.mean_video_minutes, p.mean_video_minutes, s.mean_span_minutes, t.mean_video_minutes
        )?;
        writeln!(
            f,
            "{:<26}{:>10}{:>10}{:>10.1}{:>10}",
            "Mean span time / PCL video", "", "", s.mean_minutes_per_pcl_video, ""
        )?;
        write!(
            f,
            "{:<26}{:>10.0}{:>10.0}{:>10}{:>10.0}",
            "Mean text len (char)", n.mean_transcript_chars, p.mean_transcript_chars, "-", t.mean_transcript_chars
        )
    }
}
