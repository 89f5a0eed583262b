use super::{Frame, FrameSequence};

/// Axis-aligned detection box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl BoundingBox {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self { x, y, width, height }
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    /// Intersection with a `width × height` frame.
    pub fn clamp_to(&self, width: u32, height: u32) -> Option<BoundingBox> {
        let x1 = self.x.saturating_add(self.width).min(width);
        let y1 = self.y.saturating_add(self.height).min(height);
        (self.x < x1 && self.y < y1).then(|| BoundingBox::new(self.x, self.y, x1 - self.x, y1 - self.y))
    }
}

pub trait FaceDetector: Send + Sync {
    /// Zero or more face boxes for one frame.
    fn detect(&self, frame: &Frame) -> Result<Vec<BoundingBox>, String>;
}

/// Per-frame face flags with the crop of the detected face.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaceGateResult {
    pub crops: Vec<Option<Frame>>,
}

impl FaceGateResult {
    pub fn len(&self) -> usize {
        self.crops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crops.is_empty()
    }

    pub fn flags(&self) -> Vec<bool> {
        self.crops.iter().map(Option::is_some).collect()
    }

    pub fn detected(&self) -> usize {
        self.crops.iter().filter(|c| c.is_some()).count()
    }

    /// All frames flagged as face-less.
    pub fn none(n: usize) -> Self {
        Self { crops: vec![None; n] }
    }
}

/// Run the detector on every frame. With several detections the largest box
/// wins (first one on ties); detector failures unset the flag for that frame.
pub fn gate_faces(frames: &FrameSequence, detector: &dyn FaceDetector) -> FaceGateResult {
    let crops = frames
        .frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let boxes = match detector.detect(frame) {
                Ok(b) => b,
                Err(e) => {
                    log::warn!("face detector failed on frame {i}: {e}");
                    return None;
                }
            };
            let best = boxes
                .iter()
                .filter_map(|b| b.clamp_to(frame.width, frame.height))
                .fold(None::<BoundingBox>, |best, b| match best {
                    Some(cur) if cur.area() >= b.area() => Some(cur),
                    _ => Some(b),
                })?;
            Some(frame.crop(best.x, best.y, best.width, best.height))
        })
        .collect();
    FaceGateResult { crops }
}

/// Toy detector: the bounding box of all pixels within `tolerance` (per
/// channel) of a key colour, if at least `min_pixels` match.
#[derive(Debug, Clone, Copy)]
pub struct ColorKeyDetector {
    pub key: [u8; 3],
    pub tolerance: u8,
    pub min_pixels: usize,
}

impl Default for ColorKeyDetector {
    fn default() -> Self {
        Self { key: [224, 172, 105], tolerance: 12, min_pixels: 4 }
    }
}

impl FaceDetector for ColorKeyDetector {
    fn detect(&self, frame: &Frame) -> Result<Vec<BoundingBox>, String> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        let mut hits = 0;
        for y in 0..frame.height {
            for x in 0..frame.width {
                let px = frame.pixel(x, y);
                if px.iter().zip(self.key).all(|(&p, k)| p.abs_diff(k) <= self.tolerance) {
                    hits += 1;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        if hits < self.min_pixels.max(1) {
            return Ok(vec![]);
        }
        Ok(vec![BoundingBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)])
    }
}
