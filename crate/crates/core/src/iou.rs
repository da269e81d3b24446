//! Overlap measures: binary IoU, soft IoU and video-tube IoU.

use crate::error::{Error, Result};
use crate::mask::{BitMask, ProbMask};
use crate::track::Track;

/// `|a ∩ b| / |a ∪ b|`, defined as 0 when both masks are empty.
pub fn mask_iou(a: &BitMask, b: &BitMask) -> Result<f64> {
    let inter = a.intersection_count(b)?;
    let union = a.union_count(b)?;
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}

/// `Σ min(a, b) / Σ max(a, b)`, defined as 0 when both masks are all zero.
///
/// On {0, 1}-valued inputs both sums are exact integers, so the result is
/// bit-identical to [`mask_iou`].
pub fn soft_iou(a: &ProbMask, b: &ProbMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        num += x.min(y);
        den += x.max(y);
    }
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// IoU of two tubes: `Σ_t |a_t ∩ b_t| / Σ_t |a_t ∪ b_t|`. A frame missing
/// from one track contributes an empty mask on that side.
pub fn tube_iou(a: &Track, b: &Track) -> Result<f64> {
    if let (Some(da), Some(db)) = (a.dims(), b.dims()) {
        if da != db {
            return Err(Error::DimensionMismatch {
                expected: da,
                found: db,
            });
        }
    }
    let inter = a.intersection_count(b)?;
    let union = a.pixel_count() + b.pixel_count() - inter;
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}
