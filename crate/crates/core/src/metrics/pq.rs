use serde::{Deserialize, Serialize};

use crate::classes::ClassId;
use crate::error::Result;
use crate::numeric::ratio;
use crate::panoptic::Sequence;

use super::accumulate::{Accumulator, ClassAcc};
use super::EvalConfig;

/// Panoptic quality counts and ratios for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPq {
    pub class_id: ClassId,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub iou_sum: f64,
    pub pq: f64,
    /// Mean IoU of matched segments (the "SQ" factor of PQ = SQ x RQ).
    pub sq: f64,
    pub rq: f64,
}

impl ClassPq {
    pub fn from_counts(class_id: ClassId, tp: u64, fp: u64, fn_: u64, iou_sum: f64) -> Self {
        let den = tp as f64 + 0.5 * fp as f64 + 0.5 * fn_ as f64;
        ClassPq {
            class_id,
            tp,
            fp,
            fn_,
            iou_sum,
            pq: ratio(iou_sum, den).min(1.0),
            sq: ratio(iou_sum, tp as f64).min(1.0),
            rq: ratio(tp as f64, den),
        }
    }

    /// Whether the class took part in the evaluation at all.
    pub fn is_active(&self) -> bool {
        self.tp + self.fp + self.fn_ > 0
    }
}

/// Per-class panoptic quality plus class-averaged PQ, SQ and RQ.
///
/// The averages run over classes with at least one segment on either side;
/// with no such class they are 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqStats {
    pub classes: Vec<ClassPq>,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
}

impl PqStats {
    pub fn from_classes(mut classes: Vec<ClassPq>) -> Self {
        classes.sort_by_key(|c| c.class_id);
        let active: Vec<&ClassPq> = classes.iter().filter(|c| c.is_active()).collect();
        let n = active.len() as f64;
        let mean = |f: fn(&ClassPq) -> f64| ratio(active.iter().map(|c| f(c)).sum(), n);
        let (pq, sq, rq) = (mean(|c| c.pq), mean(|c| c.sq), mean(|c| c.rq));
        PqStats {
            classes,
            pq,
            sq,
            rq,
        }
    }

    pub(crate) fn from_accumulator(
        classes: &std::collections::BTreeMap<ClassId, ClassAcc>,
    ) -> Self {
        PqStats::from_classes(
            classes
                .iter()
                .map(|(&c, a)| ClassPq::from_counts(c, a.tp, a.fp, a.fn_, a.iou_sum.value()))
                .collect(),
        )
    }

    pub fn class(&self, id: ClassId) -> Option<&ClassPq> {
        self.classes.iter().find(|c| c.class_id == id)
    }
}

/// Panoptic quality of `pred` against `gt`, matched per frame and
/// accumulated over the sequence.
pub fn compute_pq(gt: &Sequence, pred: &Sequence) -> Result<PqStats> {
    gt.check_compatible(pred)?;
    let mut acc = Accumulator::new(gt.class_table(), EvalConfig::default());
    for (g, p) in gt.frames().iter().zip(pred.frames()) {
        acc.add_frame(g, p);
    }
    Ok(PqStats::from_accumulator(&acc.classes))
}
