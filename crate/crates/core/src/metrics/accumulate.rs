//! Single-pass sequence accumulator.
//!
//! Every metric in this crate is a function of per-frame overlap counts
//! between ground-truth and predicted segments. The accumulator builds those
//! counts with one pass over each frame's pixels and keeps only integer
//! tallies, so the result does not depend on evaluation order.

use std::collections::{BTreeMap, HashMap};

use crate::classes::{ClassId, ClassTable};
use crate::numeric::CompensatedSum;
use crate::panoptic::{InstanceId, PanopticMap};

use super::{EvalConfig, MATCH_IOU};

const VOID: u32 = u32::MAX;

type Label = (ClassId, InstanceId);

#[derive(Default)]
struct Interner {
    keys: Vec<Label>,
    index: HashMap<Label, u32>,
}

impl Interner {
    fn intern(&mut self, key: Label) -> u32 {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.keys.len() as u32;
        self.keys.push(key);
        self.index.insert(key, i);
        i
    }
}

/// Overlap counts between the segments of one ground-truth frame and one
/// predicted frame. Ignore-class pixels map to no segment.
pub(crate) struct FrameTable {
    pub gt: Vec<Label>,
    pub pred: Vec<Label>,
    pub gt_area: Vec<u64>,
    /// All pixels of each predicted segment, including those on void ground truth.
    pub pred_area: Vec<u64>,
    /// Pixels of each predicted segment that fall on void ground truth.
    pub pred_void: Vec<u64>,
    /// Dense `gt.len() x pred.len()` overlap matrix.
    overlap: Vec<u64>,
}

impl FrameTable {
    pub fn build(gt: &PanopticMap, pred: &PanopticMap, table: &ClassTable) -> FrameTable {
        debug_assert_eq!(gt.dims(), pred.dims());
        let n = gt.pixel_count();
        let mut gi = Interner::default();
        let mut pi = Interner::default();
        let mut gidx = Vec::with_capacity(n);
        let mut pidx = Vec::with_capacity(n);

        let label_pass = |classes: &[ClassId],
                          instances: &[InstanceId],
                          interner: &mut Interner,
                          out: &mut Vec<u32>| {
            let mut last: Option<(Label, u32)> = None;
            for (&c, &i) in classes.iter().zip(instances) {
                let key = (c, i);
                let idx = match last {
                    Some((k, idx)) if k == key => idx,
                    _ => {
                        let idx = if table.is_ignore(c) {
                            VOID
                        } else {
                            interner.intern(key)
                        };
                        last = Some((key, idx));
                        idx
                    }
                };
                out.push(idx);
            }
        };
        label_pass(gt.classes(), gt.instances(), &mut gi, &mut gidx);
        label_pass(pred.classes(), pred.instances(), &mut pi, &mut pidx);

        let (ng, np) = (gi.keys.len(), pi.keys.len());
        let mut gt_area = vec![0u64; ng];
        let mut pred_area = vec![0u64; np];
        let mut pred_void = vec![0u64; np];
        let mut overlap = vec![0u64; ng * np];
        for (&g, &p) in gidx.iter().zip(&pidx) {
            match (g, p) {
                (VOID, VOID) => {}
                (VOID, p) => {
                    pred_area[p as usize] += 1;
                    pred_void[p as usize] += 1;
                }
                (g, VOID) => gt_area[g as usize] += 1,
                (g, p) => {
                    gt_area[g as usize] += 1;
                    pred_area[p as usize] += 1;
                    overlap[g as usize * np + p as usize] += 1;
                }
            }
        }
        FrameTable {
            gt: gi.keys,
            pred: pi.keys,
            gt_area,
            pred_area,
            pred_void,
            overlap,
        }
    }

    #[inline]
    pub fn overlap(&self, g: usize, p: usize) -> u64 {
        self.overlap[g * self.pred.len() + p]
    }

    /// Pixels of predicted segment `p` that are not on void ground truth.
    #[inline]
    pub fn pred_valid(&self, p: usize) -> u64 {
        self.pred_area[p] - self.pred_void[p]
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct ClassAcc {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub iou_sum: CompensatedSum,
    pub sem_intersection: u64,
    pub sem_gt: u64,
    pub sem_pred: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct GtTrackAcc {
    pub class_id: ClassId,
    pub pixels: u64,
    /// Per frame of the track, the predicted id matched at IoU > 0.5.
    pub matches: Vec<(usize, Option<InstanceId>)>,
    /// Tube overlap with each predicted id.
    pub overlaps: BTreeMap<InstanceId, u64>,
}

#[derive(Debug, Clone)]
pub(crate) struct PredTubeAcc {
    pub pixels: u64,
}

pub(crate) struct Accumulator<'a> {
    table: &'a ClassTable,
    cfg: EvalConfig,
    pub frames: usize,
    pub classes: BTreeMap<ClassId, ClassAcc>,
    pub gt_tracks: BTreeMap<InstanceId, GtTrackAcc>,
    pub pred_tubes: BTreeMap<InstanceId, PredTubeAcc>,
}

impl<'a> Accumulator<'a> {
    pub fn new(table: &'a ClassTable, cfg: EvalConfig) -> Self {
        Accumulator {
            table,
            cfg,
            frames: 0,
            classes: BTreeMap::new(),
            gt_tracks: BTreeMap::new(),
            pred_tubes: BTreeMap::new(),
        }
    }

    fn is_tracked(&self, (c, i): Label) -> bool {
        i != 0 && self.table.is_thing(c)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn add_frame(&mut self, gt: &PanopticMap, pred: &PanopticMap) {
        let t = self.frames;
        self.frames += 1;
        let ft = FrameTable::build(gt, pred, self.table);
        let (ng, np) = (ft.gt.len(), ft.pred.len());

        // Panoptic quality: unique matching at IoU > 0.5 within a class, with
        // void-overlapping prediction pixels removed from the union.
        let mut gt_matched = vec![false; ng];
        let mut pred_matched = vec![false; np];
        for g in 0..ng {
            for p in 0..np {
                let inter = ft.overlap(g, p);
                if inter == 0 || ft.gt[g].0 != ft.pred[p].0 {
                    continue;
                }
                let union = ft.gt_area[g] + ft.pred_area[p] - inter - ft.pred_void[p];
                let iou = inter as f64 / union as f64;
                if iou > MATCH_IOU {
                    gt_matched[g] = true;
                    pred_matched[p] = true;
                    let acc = self.classes.entry(ft.gt[g].0).or_default();
                    acc.tp += 1;
                    acc.iou_sum.add(iou);
                }
            }
        }
        for g in 0..ng {
            let acc = self.classes.entry(ft.gt[g].0).or_default();
            if !gt_matched[g] {
                acc.fn_ += 1;
            }
            acc.sem_gt += ft.gt_area[g];
        }
        for p in 0..np {
            let acc = self.classes.entry(ft.pred[p].0).or_default();
            if !pred_matched[p] && (ft.pred_void[p] as f64) <= 0.5 * ft.pred_area[p] as f64 {
                acc.fp += 1;
            }
            acc.sem_pred += ft.pred_valid(p);
        }
        for g in 0..ng {
            for p in 0..np {
                if ft.gt[g].0 == ft.pred[p].0 {
                    let inter = ft.overlap(g, p);
                    if inter > 0 {
                        self.classes
                            .get_mut(&ft.gt[g].0)
                            .expect("inserted above")
                            .sem_intersection += inter;
                    }
                }
            }
        }

        // Association: tubes keyed by instance id over thing classes.
        for p in 0..np {
            if self.is_tracked(ft.pred[p]) {
                let valid = ft.pred_valid(p);
                let tube = self
                    .pred_tubes
                    .entry(ft.pred[p].1)
                    .or_insert(PredTubeAcc { pixels: 0 });
                tube.pixels += valid;
            }
        }
        for g in 0..ng {
            if !self.is_tracked(ft.gt[g]) {
                continue;
            }
            let (gclass, gid) = ft.gt[g];
            let mut matched = None;
            let track = self.gt_tracks.entry(gid).or_insert(GtTrackAcc {
                class_id: gclass,
                pixels: 0,
                matches: Vec::new(),
                overlaps: BTreeMap::new(),
            });
            track.pixels += ft.gt_area[g];
            for p in 0..np {
                let inter = ft.overlap(g, p);
                if inter == 0 || !(ft.pred[p].1 != 0 && self.table.is_thing(ft.pred[p].0)) {
                    continue;
                }
                if self.cfg.class_aware_association && ft.pred[p].0 != gclass {
                    continue;
                }
                *track.overlaps.entry(ft.pred[p].1).or_insert(0) += inter;
                let union = ft.gt_area[g] + ft.pred_valid(p) - inter;
                if inter as f64 / union as f64 > MATCH_IOU {
                    matched = Some(ft.pred[p].1);
                }
            }
            track.matches.push((t, matched));
        }
    }
}
