//! Association metrics over instance tubes: AS, AQ, ID switches and TQ.
//!
//! These functions take ground-truth [`Track`]s and a predicted
//! [`Sequence`]. Predictions should already have void ground-truth pixels
//! removed (see [`Sequence::mask_ignored`]); [`evaluate_sequence`] does this
//! itself and reaches the same numbers through a single counting pass.
//!
//! [`evaluate_sequence`]: super::evaluate_sequence

use serde::{Deserialize, Serialize};

use crate::classes::ClassId;
use crate::error::{Error, Result};
use crate::iou::{mask_iou, tube_iou};
use crate::numeric::CompensatedSum;
use crate::panoptic::{extract_segments, InstanceId, Sequence};
use crate::track::{Track, TrackId};

use super::{EvalConfig, MATCH_IOU};

/// Tracking quality of one ground-truth track.
///
/// This is the single place where the ID-switch rate and the association
/// score are combined: `sqrt((1 - ids / n_ids) * as_score)`, with the rate
/// taken as 0 when `n_ids == 0` (a single-frame track cannot fragment).
pub fn track_quality(ids: u32, n_ids: u32, as_score: f64) -> f64 {
    let rate = if n_ids == 0 {
        0.0
    } else {
        ids as f64 / n_ids as f64
    };
    ((1.0 - rate) * as_score).max(0.0).sqrt()
}

/// ID-switch count of a track and the largest count it could have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSwitches {
    pub ids: u32,
    pub n_ids: u32,
}

impl IdSwitches {
    /// Counts consecutive entries whose matched ids differ or where either
    /// side is unmatched.
    pub fn from_matches<T: PartialEq>(matches: &[Option<T>]) -> Self {
        let ids = matches
            .windows(2)
            .filter(|w| match (&w[0], &w[1]) {
                (Some(a), Some(b)) => a != b,
                _ => true,
            })
            .count() as u32;
        IdSwitches {
            ids,
            n_ids: matches.len().saturating_sub(1) as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackScore {
    pub track_id: TrackId,
    pub class_id: ClassId,
    /// Tube volume of the ground-truth track.
    pub gt_pixels: u64,
    #[serde(rename = "as")]
    pub as_score: f64,
    pub ids: u32,
    pub n_ids: u32,
    pub tq: f64,
}

impl TrackScore {
    pub fn new(
        track_id: TrackId,
        class_id: ClassId,
        gt_pixels: u64,
        as_score: f64,
        switches: IdSwitches,
    ) -> Self {
        TrackScore {
            track_id,
            class_id,
            gt_pixels,
            as_score,
            ids: switches.ids,
            n_ids: switches.n_ids,
            tq: track_quality(switches.ids, switches.n_ids, as_score),
        }
    }
}

/// Aggregate tracking quality with the per-track breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackQuality {
    pub tq: f64,
    pub tracks: Vec<TrackScore>,
    /// Set when there are no ground-truth tracks; `tq` is then 1.
    pub vacuous: bool,
}

/// `(1/|g|) Σ_p |p∩g| · IoU(p, g)` given the tube overlaps `(|p∩g|, |p|)`.
pub(crate) fn association_score(gt_pixels: u64, overlaps: impl Iterator<Item = (u64, u64)>) -> f64 {
    let mut sum = CompensatedSum::default();
    for (tpa, pred_pixels) in overlaps {
        if tpa == 0 {
            continue;
        }
        let iou = tpa as f64 / (pred_pixels + gt_pixels - tpa) as f64;
        sum.add(tpa as f64 * iou);
    }
    (sum.value() / gt_pixels as f64).min(1.0)
}

fn eligible(g: &Track, p_class: ClassId, cfg: EvalConfig) -> bool {
    !cfg.class_aware_association || p_class == g.class_id()
}

/// Association score of ground-truth track `g` against predicted tubes.
pub fn compute_as(g: &Track, pred_tubes: &[Track], cfg: EvalConfig) -> Result<f64> {
    let gt_pixels = g.pixel_count();
    if gt_pixels == 0 {
        return Err(Error::EmptyTrack(g.track_id()));
    }
    let mut sum = CompensatedSum::default();
    for p in pred_tubes.iter().filter(|p| eligible(g, p.class_id(), cfg)) {
        let tpa = p.intersection_count(g)?;
        if tpa > 0 {
            sum.add(tpa as f64 * tube_iou(p, g)?);
        }
    }
    Ok((sum.value() / gt_pixels as f64).min(1.0))
}

/// Association quality: the mean of [`compute_as`] over ground-truth tracks.
/// Returns 1 when there are no ground-truth tracks.
pub fn compute_aq(gt_tracks: &[Track], pred: &Sequence, cfg: EvalConfig) -> Result<f64> {
    if gt_tracks.is_empty() {
        return Ok(1.0);
    }
    let pred_tubes = pred.tracks();
    let mut sum = CompensatedSum::default();
    for g in gt_tracks {
        check_grid(g, pred)?;
        sum.add(compute_as(g, &pred_tubes, cfg)?);
    }
    Ok(sum.value() / gt_tracks.len() as f64)
}

fn check_grid(g: &Track, pred: &Sequence) -> Result<()> {
    if let Some(d) = g.dims() {
        if d != pred.dims() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: pred.dims(),
            });
        }
    }
    if let Some(last) = g.frames().last() {
        if last >= pred.len() {
            return Err(Error::InvalidTrack(format!(
                "track {} has frame {last} but the prediction has {} frames",
                g.track_id(),
                pred.len()
            )));
        }
    }
    Ok(())
}

/// Predicted instance id matched to each frame of `g` (IoU > 0.5), in frame
/// order.
fn frame_matches(g: &Track, pred: &Sequence, cfg: EvalConfig) -> Result<Vec<Option<InstanceId>>> {
    check_grid(g, pred)?;
    let table = pred.class_table();
    let mut out = Vec::with_capacity(g.len());
    for (&t, mask) in g.masks() {
        let mut matched = None;
        for seg in extract_segments(&pred.frames()[t], table) {
            if seg.instance_id == 0
                || !table.is_thing(seg.class_id)
                || !eligible(g, seg.class_id, cfg)
            {
                continue;
            }
            if mask_iou(mask, &seg.mask)? > MATCH_IOU {
                matched = Some(seg.instance_id);
            }
        }
        out.push(matched);
    }
    Ok(out)
}

/// ID switches of `g` against `pred`: consecutive frames of `g` whose matched
/// predicted ids differ, or where either frame has no match.
pub fn count_id_switches(g: &Track, pred: &Sequence, cfg: EvalConfig) -> Result<IdSwitches> {
    Ok(IdSwitches::from_matches(&frame_matches(g, pred, cfg)?))
}

/// Tracking quality `TQ = mean_g sqrt((1 - IDS(g)/N_IDS(g)) * AS(g))`.
pub fn compute_tq(gt_tracks: &[Track], pred: &Sequence, cfg: EvalConfig) -> Result<TrackQuality> {
    if gt_tracks.is_empty() {
        return Ok(TrackQuality {
            tq: 1.0,
            tracks: Vec::new(),
            vacuous: true,
        });
    }
    let pred_tubes = pred.tracks();
    let mut tracks = Vec::with_capacity(gt_tracks.len());
    for g in gt_tracks {
        let as_score = compute_as(g, &pred_tubes, cfg)?;
        let switches = count_id_switches(g, pred, cfg)?;
        tracks.push(TrackScore::new(
            g.track_id(),
            g.class_id(),
            g.pixel_count(),
            as_score,
            switches,
        ));
    }
    let tq = tracks
        .iter()
        .map(|s| s.tq)
        .collect::<CompensatedSum>()
        .value()
        / tracks.len() as f64;
    Ok(TrackQuality {
        tq,
        tracks,
        vacuous: false,
    })
}
