use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classes::ClassId;
use crate::error::Result;
use crate::numeric::ratio;
use crate::panoptic::Sequence;

use super::accumulate::{Accumulator, ClassAcc};
use super::EvalConfig;

/// Pixel-level IoU of one class over a whole sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassIou {
    pub class_id: ClassId,
    pub intersection: u64,
    pub union: u64,
    pub gt_pixels: u64,
    pub iou: f64,
}

impl ClassIou {
    pub fn from_counts(
        class_id: ClassId,
        intersection: u64,
        gt_pixels: u64,
        pred_pixels: u64,
    ) -> Self {
        let union = gt_pixels + pred_pixels - intersection;
        ClassIou {
            class_id,
            intersection,
            union,
            gt_pixels,
            iou: ratio(intersection as f64, union as f64),
        }
    }
}

/// Segmentation quality: per-class IoU and its mean over the classes present
/// in the ground truth (0 when no class is present).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticStats {
    pub classes: Vec<ClassIou>,
    pub mean: f64,
}

impl SemanticStats {
    pub fn from_classes(mut classes: Vec<ClassIou>) -> Self {
        classes.retain(|c| c.union > 0);
        classes.sort_by_key(|c| c.class_id);
        let present: Vec<f64> = classes
            .iter()
            .filter(|c| c.gt_pixels > 0)
            .map(|c| c.iou)
            .collect();
        let mean = ratio(present.iter().sum(), present.len() as f64);
        SemanticStats { classes, mean }
    }

    pub(crate) fn from_accumulator(classes: &BTreeMap<ClassId, ClassAcc>) -> Self {
        SemanticStats::from_classes(
            classes
                .iter()
                .map(|(&c, a)| ClassIou::from_counts(c, a.sem_intersection, a.sem_gt, a.sem_pred))
                .collect(),
        )
    }

    pub fn class(&self, id: ClassId) -> Option<&ClassIou> {
        self.classes.iter().find(|c| c.class_id == id)
    }
}

pub fn compute_sq(gt: &Sequence, pred: &Sequence) -> Result<SemanticStats> {
    gt.check_compatible(pred)?;
    let mut acc = Accumulator::new(gt.class_table(), EvalConfig::default());
    for (g, p) in gt.frames().iter().zip(pred.frames()) {
        acc.add_frame(g, p);
    }
    Ok(SemanticStats::from_accumulator(&acc.classes))
}
