use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classes::ClassId;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::rle::{rle_decode, rle_encode, RleMask};
use crate::track::TrackId;
use crate::tracker::Detection;

use super::{read_json, write_json};

pub const DETECTIONS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub class_id: ClassId,
    pub score: f64,
    pub rle: RleMask,
    pub embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagated_rle: Option<RleMask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagated_from: Option<TrackId>,
}

impl DetectionRecord {
    pub fn from_detection(d: &Detection) -> Self {
        DetectionRecord {
            class_id: d.class_id,
            score: d.score,
            rle: rle_encode(&d.mask),
            embedding: d.embedding.values().to_vec(),
            offset: d.offset.map(|(x, y)| [x, y]),
            propagated_rle: d.propagated.as_ref().map(|p| rle_encode(&p.mask)),
            propagated_from: d.propagated.as_ref().map(|p| p.track_id),
        }
    }

    pub fn to_detection(&self) -> Result<Detection> {
        let mut d = Detection::new(
            rle_decode(&self.rle),
            self.class_id,
            self.score,
            Embedding::new(self.embedding.clone())?,
        )?;
        d.offset = self.offset.map(|[x, y]| (x, y));
        if let (Some(rle), Some(id)) = (&self.propagated_rle, self.propagated_from) {
            d = d.with_propagated(id, rle_decode(rle));
        }
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionFrame {
    pub frame: usize,
    pub detections: Vec<DetectionRecord>,
}

/// Per-frame detections of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionsFile {
    pub version: u32,
    pub width: u32,
    pub height: u32,
    pub embedding_dim: usize,
    pub frames: Vec<DetectionFrame>,
}

impl DetectionsFile {
    pub fn new(width: u32, height: u32, embedding_dim: usize) -> Self {
        DetectionsFile {
            version: DETECTIONS_VERSION,
            width,
            height,
            embedding_dim,
            frames: Vec::new(),
        }
    }

    /// Builds a file from per-frame detections, frame `i` at index `i`.
    pub fn from_frames(
        width: u32,
        height: u32,
        embedding_dim: usize,
        frames: &[Vec<Detection>],
    ) -> Result<Self> {
        let mut f = DetectionsFile::new(width, height, embedding_dim);
        f.frames = frames
            .iter()
            .enumerate()
            .map(|(i, dets)| DetectionFrame {
                frame: i,
                detections: dets.iter().map(DetectionRecord::from_detection).collect(),
            })
            .collect();
        f.validate()?;
        Ok(f)
    }

    /// Checks cross-field invariants. Errors name the offending field path.
    pub fn validate(&self) -> Result<()> {
        let err = |field: String, message: String| Error::Schema {
            path: Default::default(),
            field,
            message,
        };
        if self.version != DETECTIONS_VERSION {
            return Err(err(
                "version".into(),
                format!("unsupported version {}", self.version),
            ));
        }
        let mut previous = None;
        for (fi, frame) in self.frames.iter().enumerate() {
            if previous.is_some_and(|p| frame.frame <= p) {
                return Err(err(
                    format!("frames[{fi}].frame"),
                    format!("frame {} does not increase", frame.frame),
                ));
            }
            previous = Some(frame.frame);
            for (di, d) in frame.detections.iter().enumerate() {
                let at = |f: &str| format!("frames[{fi}].detections[{di}].{f}");
                if d.rle.dims() != (self.width, self.height) {
                    return Err(err(
                        at("rle"),
                        format!(
                            "mask is {}x{}, file is {}x{} (frame {})",
                            d.rle.width(),
                            d.rle.height(),
                            self.width,
                            self.height,
                            frame.frame
                        ),
                    ));
                }
                if d.embedding.len() != self.embedding_dim {
                    return Err(err(
                        at("embedding"),
                        format!(
                            "length {} differs from embedding_dim {} (frame {})",
                            d.embedding.len(),
                            self.embedding_dim,
                            frame.frame
                        ),
                    ));
                }
                if d.propagated_rle.is_some() != d.propagated_from.is_some() {
                    return Err(err(
                        at("propagated_from"),
                        "propagated_rle and propagated_from must appear together".into(),
                    ));
                }
                if let Some(p) = &d.propagated_rle {
                    if p.dims() != (self.width, self.height) {
                        return Err(err(at("propagated_rle"), "mask dimensions differ".into()));
                    }
                }
                d.to_detection()
                    .map_err(|e| err(at("rle"), format!("{e} (frame {})", frame.frame)))?;
            }
        }
        Ok(())
    }

    /// Detections of frame `index`, empty when the file has no entry for it.
    pub fn detections_at(&self, index: usize) -> Result<Vec<Detection>> {
        match self.frames.iter().find(|f| f.frame == index) {
            Some(f) => f
                .detections
                .iter()
                .map(DetectionRecord::to_detection)
                .collect(),
            None => Ok(Vec::new()),
        }
    }
}

pub fn read_detections(path: &Path) -> Result<DetectionsFile> {
    let file: DetectionsFile = read_json(path)?;
    file.validate().map_err(|e| match e {
        Error::Schema { field, message, .. } => Error::Schema {
            path: path.to_path_buf(),
            field,
            message,
        },
        e => e,
    })?;
    Ok(file)
}

pub fn write_detections(file: &DetectionsFile, path: &Path) -> Result<()> {
    file.validate()?;
    write_json(file, path)
}
