//! Controlled corruptions of a ground-truth sequence.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::classes::{ClassId, ClassTable};
use crate::error::{Error, Result};
use crate::mask::BitMask;
use crate::panoptic::{extract_segments, InstanceId, PanopticMap, Sequence};

use super::{rng, STREAM_DROP, STREAM_IDS};

/// Gives `k` track suffixes fresh instance ids.
///
/// Cut points are (track, frame) pairs where the frame is not the track's
/// first. They are drawn without replacement from a seeded permutation, so
/// the cuts for `k` are a subset of the cuts for `k + 1`. At each cut the
/// track continues under a new id, `max id + 1` onward. Classes and masks
/// are untouched.
pub fn perturb_ids(gt: &Sequence, k: usize, seed: u64) -> Result<Sequence> {
    let tracks = gt.tracks();
    let mut eligible: Vec<(InstanceId, usize)> = tracks
        .iter()
        .flat_map(|t| t.frames().skip(1).map(move |f| (t.track_id(), f)))
        .collect();
    if k > eligible.len() {
        return Err(Error::InvalidValue(format!(
            "{k} id switches requested but only {} cut points exist",
            eligible.len()
        )));
    }
    eligible.shuffle(&mut rng(seed, STREAM_IDS));
    let cuts: BTreeSet<(InstanceId, usize)> = eligible[..k].iter().copied().collect();

    let mut next = gt
        .frames()
        .iter()
        .flat_map(|f| f.instances().iter().copied())
        .max()
        .unwrap_or(0);
    // New id per (track, frame) for every frame at or after a cut.
    let mut relabel: BTreeMap<(InstanceId, usize), InstanceId> = BTreeMap::new();
    for t in &tracks {
        let mut current = t.track_id();
        for f in t.frames() {
            if cuts.contains(&(t.track_id(), f)) {
                next = next
                    .checked_add(1)
                    .ok_or_else(|| Error::IdOverflow("instance ids exhausted".into()))?;
                current = next;
            }
            if current != t.track_id() {
                relabel.insert((t.track_id(), f), current);
            }
        }
    }
    let frames = gt
        .frames()
        .iter()
        .enumerate()
        .map(|(f, map)| {
            let instances: Vec<InstanceId> = map
                .instances()
                .iter()
                .map(|&i| relabel.get(&(i, f)).copied().unwrap_or(i))
                .collect();
            PanopticMap::new(map.width(), map.height(), map.classes().to_vec(), instances)
                .expect("same dims")
        })
        .collect();
    Sequence::new(frames, gt.class_table().clone())
}

/// Class used to repaint a thing pixel that lost its instance: the nearest
/// stuff pixel of `original` in the same column (upwards first at equal
/// distance), else in the same row (left first), else the first stuff class.
fn fill_class(original: &PanopticMap, table: &ClassTable, x: u32, y: u32) -> ClassId {
    let (w, h) = original.dims();
    let is_stuff = |c: ClassId| !table.is_thing(c) && !table.is_ignore(c);
    for d in 1..h.max(w) {
        if d < h {
            if y >= d && is_stuff(original.get(x, y - d).0) {
                return original.get(x, y - d).0;
            }
            if y + d < h && is_stuff(original.get(x, y + d).0) {
                return original.get(x, y + d).0;
            }
        }
    }
    for d in 1..w {
        if x >= d && is_stuff(original.get(x - d, y).0) {
            return original.get(x - d, y).0;
        }
        if x + d < w && is_stuff(original.get(x + d, y).0) {
            return original.get(x + d, y).0;
        }
    }
    table
        .stuff_ids()
        .next()
        .or(table.ignore_id())
        .unwrap_or(original.get(x, y).0)
}

fn vacate(original: &PanopticMap, out: &mut PanopticMap, table: &ClassTable, mask: &BitMask) {
    for (x, y) in mask.iter_ones() {
        out.set(x, y, fill_class(original, table, x, y), 0);
    }
}

/// Erodes every thing segment by a square structuring element of the given
/// radius. Vacated pixels take the nearest stuff class; segments that
/// vanish are removed.
pub fn perturb_masks(gt: &Sequence, erosion: u32) -> Result<Sequence> {
    if erosion == 0 {
        return Ok(gt.clone());
    }
    let table = gt.class_table();
    let frames = gt
        .frames()
        .iter()
        .map(|map| {
            let mut out = map.clone();
            for seg in extract_segments(map, table) {
                if table.is_thing(seg.class_id) {
                    let lost = seg
                        .mask
                        .and_not(&seg.mask.erode(erosion))
                        .expect("same dims");
                    vacate(map, &mut out, table, &lost);
                }
            }
            out
        })
        .collect();
    Sequence::new(frames, table.clone())
}

/// Removes each thing segment independently with probability `rate`,
/// visiting frames in order and segments by (class, instance). Removed
/// pixels take the nearest stuff class.
pub fn drop_detections(gt: &Sequence, rate: f64, seed: u64) -> Result<Sequence> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidValue(format!("rate {rate} outside [0, 1]")));
    }
    let table = gt.class_table();
    let mut r = rng(seed, STREAM_DROP);
    let frames = gt
        .frames()
        .iter()
        .map(|map| {
            let mut out = map.clone();
            for seg in extract_segments(map, table) {
                if table.is_thing(seg.class_id) && r.random_bool(rate) {
                    vacate(map, &mut out, table, &seg.mask);
                }
            }
            out
        })
        .collect();
    Sequence::new(frames, table.clone())
}
