//! The two association stages: mask overlap with propagated track masks,
//! then embedding similarity against the track bank.

use std::collections::{BTreeMap, BTreeSet};

use crate::classes::ClassId;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::iou::mask_iou;
use crate::mask::BitMask;
use crate::metrics::cosine_similarity;
use crate::track::TrackId;

use super::assignment::assignment_solve;
use super::detection::Detection;

/// A track's mask carried into the current frame.
///
/// An entry with `detection: Some(j)` applies only when scoring the track
/// against detection `j` and takes precedence there over entries without a
/// target.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub track_id: TrackId,
    pub class_id: ClassId,
    pub mask: BitMask,
    pub detection: Option<usize>,
}

/// Live track as seen by the appearance stage.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceCandidate {
    pub track_id: TrackId,
    pub class_id: ClassId,
    pub embedding: Embedding,
}

fn solve_max(
    rows: &[TrackId],
    cols: usize,
    mut score: impl FnMut(usize, usize) -> Result<Option<f64>>,
) -> Result<BTreeMap<usize, TrackId>> {
    let mut cost = vec![vec![0.0; cols]; rows.len()];
    let mut forbidden = vec![vec![true; cols]; rows.len()];
    for r in 0..rows.len() {
        for c in 0..cols {
            if let Some(s) = score(r, c)? {
                cost[r][c] = -s;
                forbidden[r][c] = false;
            }
        }
    }
    Ok(assignment_solve(&cost, &forbidden)?
        .into_iter()
        .map(|(r, c)| (c, rows[r]))
        .collect())
}

/// Detection index to track id, maximizing total IoU over same-class pairs
/// with IoU at least `iou_min`.
pub fn match_by_motion(
    propagated: &[Propagated],
    detections: &[Detection],
    iou_min: f64,
) -> Result<BTreeMap<usize, TrackId>> {
    if !(iou_min > 0.0 && iou_min <= 1.0) {
        return Err(Error::InvalidValue(format!(
            "iou_min {iou_min} outside (0, 1]"
        )));
    }
    let tracks: Vec<TrackId> = propagated
        .iter()
        .map(|p| p.track_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    solve_max(&tracks, detections.len(), |r, c| {
        let tid = tracks[r];
        let mine = || propagated.iter().filter(|p| p.track_id == tid);
        let entry = mine()
            .find(|p| p.detection == Some(c))
            .or_else(|| mine().find(|p| p.detection.is_none()));
        let Some(entry) = entry else {
            return Ok(None);
        };
        if entry.class_id != detections[c].class_id {
            return Ok(None);
        }
        let iou = mask_iou(&entry.mask, &detections[c].mask)?;
        Ok((iou >= iou_min && iou > 0.0).then_some(iou))
    })
}

/// Detection index to track id, maximizing total cosine similarity over
/// same-class pairs with similarity at least `sim_min`. Zero embeddings
/// never match.
pub fn match_by_appearance(
    detections: &[Detection],
    bank: &[AppearanceCandidate],
    sim_min: f64,
) -> Result<BTreeMap<usize, TrackId>> {
    if !(sim_min > -1.0 && sim_min < 1.0) {
        return Err(Error::InvalidValue(format!(
            "sim_min {sim_min} outside (-1, 1)"
        )));
    }
    let rows: Vec<TrackId> = bank.iter().map(|b| b.track_id).collect();
    solve_max(&rows, detections.len(), |r, c| {
        if bank[r].class_id != detections[c].class_id {
            return Ok(None);
        }
        match cosine_similarity(&bank[r].embedding, &detections[c].embedding) {
            Ok(s) => Ok((s >= sim_min).then_some(s)),
            Err(Error::ZeroVector) => Ok(None),
            Err(e) => Err(e),
        }
    })
}
