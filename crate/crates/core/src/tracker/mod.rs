//! Panoptic fusion and two-stage instance-id assignment.
//!
//! Each frame, detections are first resolved into a panoptic map. Surviving
//! detections are then associated with the track bank by mask overlap with
//! propagated track masks; the remainder by embedding similarity. Anything
//! still unmatched opens a new track.

mod assignment;
mod detection;
mod fusion;
mod matching;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::classes::{ClassId, ClassTable};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::mask::BitMask;
use crate::panoptic::PanopticMap;
use crate::track::TrackId;

pub use assignment::assignment_solve;
pub use detection::{combine_features, Detection, FeatureVector, PropagatedMask};
pub use fusion::{
    fuse_logits, fused_logit, resolve_detections, resolve_panoptic, LogitsMap, Resolution,
    SemanticLogits, DEFAULT_MIN_AREA, HARD_LOGIT,
};
pub use matching::{match_by_appearance, match_by_motion, AppearanceCandidate, Propagated};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Minimum IoU between a propagated track mask and a detection.
    pub iou_min: f64,
    /// Minimum cosine similarity for an appearance match.
    pub sim_min: f64,
    /// Number of past embeddings averaged per track.
    pub history: usize,
    /// Frames a track may go unseen before it is retired.
    pub max_age: usize,
    pub min_area: u64,
    pub embedding_dim: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            iou_min: 0.3,
            sim_min: 0.7,
            history: 8,
            max_age: 12,
            min_area: DEFAULT_MIN_AREA,
            embedding_dim: 128,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_min > 0.0 && self.iou_min <= 1.0) {
            return Err(Error::InvalidValue(format!(
                "iou_min {} outside (0, 1]",
                self.iou_min
            )));
        }
        if !(self.sim_min > -1.0 && self.sim_min < 1.0) {
            return Err(Error::InvalidValue(format!(
                "sim_min {} outside (-1, 1)",
                self.sim_min
            )));
        }
        if self.history == 0 {
            return Err(Error::InvalidValue("history must be at least 1".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::InvalidValue(
                "embedding_dim must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEntry {
    pub class_id: ClassId,
    pub last_mask: BitMask,
    pub last_frame: usize,
    pub embeddings: VecDeque<Embedding>,
    /// Frames since the track was last matched.
    pub age: usize,
}

impl TrackEntry {
    /// Mean of the stored embedding history.
    pub fn appearance(&self) -> Result<Embedding> {
        Embedding::mean(&self.embeddings)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub detections: usize,
    pub dropped: usize,
    pub motion_matches: usize,
    pub appearance_matches: usize,
    pub new_tracks: usize,
    pub retired: usize,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Panoptic map labelled with track ids.
    pub map: PanopticMap,
    /// Track id given to each input detection; `None` if it was dropped.
    pub assignments: Vec<Option<TrackId>>,
    pub report: StepReport,
}

/// Association memory for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    config: TrackerConfig,
    table: ClassTable,
    tracks: BTreeMap<TrackId, TrackEntry>,
    next_id: TrackId,
    last_frame: Option<usize>,
}

impl TrackerState {
    pub fn new(config: TrackerConfig, table: ClassTable) -> Result<Self> {
        config.validate()?;
        Ok(TrackerState {
            config,
            table,
            tracks: BTreeMap::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn tracks(&self) -> &BTreeMap<TrackId, TrackEntry> {
        &self.tracks
    }

    pub fn next_id(&self) -> TrackId {
        self.next_id
    }

    /// Processes one frame. Frame indices must strictly increase.
    pub fn step(
        &mut self,
        frame: usize,
        detections: &[Detection],
        semantic: &SemanticLogits,
    ) -> Result<StepOutput> {
        if let Some(prev) = self.last_frame {
            if frame <= prev {
                return Err(Error::FrameOrder {
                    previous: prev,
                    found: frame,
                });
            }
        }
        for d in detections {
            if d.embedding.len() != self.config.embedding_dim {
                return Err(Error::LengthMismatch {
                    expected: self.config.embedding_dim,
                    found: d.embedding.len(),
                });
            }
        }
        let resolution =
            resolve_detections(semantic, detections, &self.table, self.config.min_area)?;
        let kept: Vec<usize> = (0..detections.len())
            .filter(|&i| resolution.claims[i].is_some())
            .collect();
        let kept_dets: Vec<Detection> = kept.iter().map(|&i| detections[i].clone()).collect();

        let motion = match_by_motion(
            &self.propagated(&kept_dets),
            &kept_dets,
            self.config.iou_min,
        )?;

        let used: BTreeSet<TrackId> = motion.values().copied().collect();
        let rest: Vec<usize> = (0..kept_dets.len())
            .filter(|j| !motion.contains_key(j))
            .collect();
        let rest_dets: Vec<Detection> = rest.iter().map(|&j| kept_dets[j].clone()).collect();
        let mut bank = Vec::new();
        for (&id, t) in &self.tracks {
            if !used.contains(&id) {
                bank.push(AppearanceCandidate {
                    track_id: id,
                    class_id: t.class_id,
                    embedding: t.appearance()?,
                });
            }
        }
        let appearance = match_by_appearance(&rest_dets, &bank, self.config.sim_min)?;

        let mut report = StepReport {
            detections: detections.len(),
            dropped: detections.len() - kept.len(),
            motion_matches: motion.len(),
            appearance_matches: appearance.len(),
            ..StepReport::default()
        };
        let mut assignments = vec![None; detections.len()];
        for (&j, &id) in &motion {
            assignments[kept[j]] = Some(id);
        }
        for (&r, &id) in &appearance {
            assignments[kept[rest[r]]] = Some(id);
        }
        for &i in &kept {
            if assignments[i].is_none() {
                let id = self.next_id;
                self.next_id = id
                    .checked_add(1)
                    .ok_or_else(|| Error::IdOverflow("track ids exhausted".into()))?;
                assignments[i] = Some(id);
                report.new_tracks += 1;
            }
        }

        for &i in &kept {
            let id = assignments[i].expect("assigned above");
            let d = &detections[i];
            let entry = self.tracks.entry(id).or_insert_with(|| TrackEntry {
                class_id: d.class_id,
                last_mask: d.mask.clone(),
                last_frame: frame,
                embeddings: VecDeque::new(),
                age: 0,
            });
            entry.last_mask = d.mask.clone();
            entry.last_frame = frame;
            entry.embeddings.push_back(d.embedding.clone());
            while entry.embeddings.len() > self.config.history {
                entry.embeddings.pop_front();
            }
        }
        let before = self.tracks.len();
        let max_age = self.config.max_age;
        self.tracks.retain(|_, t| frame - t.last_frame <= max_age);
        report.retired = before - self.tracks.len();
        for t in self.tracks.values_mut() {
            t.age = frame - t.last_frame;
        }
        self.last_frame = Some(frame);

        let map = resolution.render(semantic.dims(), detections, |i| {
            assignments[i].expect("surviving detections are assigned")
        })?;
        Ok(StepOutput {
            map,
            assignments,
            report,
        })
    }

    /// Motion-stage entries for the current detections.
    fn propagated(&self, detections: &[Detection]) -> Vec<Propagated> {
        let mut out = Vec::new();
        for (&id, t) in &self.tracks {
            let carried = detections
                .iter()
                .filter_map(|d| d.propagated.as_ref())
                .find(|p| p.track_id == id)
                .map(|p| p.mask.clone());
            out.push(Propagated {
                track_id: id,
                class_id: t.class_id,
                mask: carried.unwrap_or_else(|| t.last_mask.clone()),
                detection: None,
            });
            for (j, d) in detections.iter().enumerate() {
                if let (Some((dx, dy)), None) = (d.offset, &d.propagated) {
                    if d.class_id == t.class_id {
                        out.push(Propagated {
                            track_id: id,
                            class_id: t.class_id,
                            mask: t.last_mask.translate(dx, dy),
                            detection: Some(j),
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: u32 = 48;
    const H: u32 = 16;

    fn cfg() -> TrackerConfig {
        TrackerConfig {
            embedding_dim: 2,
            min_area: 4,
            ..TrackerConfig::default()
        }
    }

    fn state() -> TrackerState {
        TrackerState::new(cfg(), ClassTable::kitti_step()).unwrap()
    }

    fn det(x: i64, e: &[f64]) -> Detection {
        Detection::new(
            BitMask::rect(W, H, x, 4, 6, 6).unwrap(),
            13,
            0.9,
            Embedding::new(e.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn semantic(dets: &[Detection]) -> SemanticLogits {
        let t = ClassTable::kitti_step();
        let mut m = PanopticMap::filled(W, H, 0).unwrap();
        for d in dets {
            m.paint(&d.mask, d.class_id, 0).unwrap();
        }
        SemanticLogits::from_class_map(&m, &t).unwrap()
    }

    fn run(s: &mut TrackerState, frame: usize, dets: &[Detection]) -> StepOutput {
        s.step(frame, dets, &semantic(dets)).unwrap()
    }

    #[test]
    fn first_frame_ids_follow_detection_order() {
        let mut s = state();
        let dets = vec![
            det(0, &[1.0, 0.0]),
            det(20, &[0.0, 1.0]),
            det(40, &[1.0, 1.0]),
        ];
        let out = run(&mut s, 0, &dets);
        assert_eq!(out.assignments, vec![Some(1), Some(2), Some(3)]);
        assert_eq!(out.report.new_tracks, 3);
        assert_eq!(s.next_id(), 4);
    }

    #[test]
    fn motion_with_offsets_keeps_ids() {
        let mut s = state();
        let e = [1.0, 0.0];
        run(&mut s, 0, &[det(0, &e), det(20, &e)]);
        // Both objects moved right by 4; identical embeddings.
        let out = run(
            &mut s,
            1,
            &[det(24, &e).with_offset(4, 0), det(4, &e).with_offset(4, 0)],
        );
        assert_eq!(out.assignments, vec![Some(2), Some(1)]);
        assert_eq!(out.report.motion_matches, 2);
    }

    #[test]
    fn appearance_recovers_after_jump() {
        let mut s = state();
        run(&mut s, 0, &[det(0, &[1.0, 0.0]), det(30, &[0.0, 1.0])]);
        let out = run(&mut s, 1, &[det(14, &[0.0, 1.0]), det(40, &[1.0, 0.0])]);
        assert_eq!(out.assignments, vec![Some(2), Some(1)]);
        assert_eq!(out.report.appearance_matches, 2);
    }

    #[test]
    fn motion_stage_runs_before_appearance() {
        let mut s = state();
        run(&mut s, 0, &[det(0, &[1.0, 0.0]), det(30, &[0.0, 1.0])]);
        // Detection overlaps track 1 but looks exactly like track 2.
        let out = run(&mut s, 1, &[det(1, &[0.0, 1.0])]);
        assert_eq!(out.assignments, vec![Some(1)]);
        assert_eq!(out.report.motion_matches, 1);
    }

    #[test]
    fn propagated_mask_steers_motion() {
        let mut s = state();
        run(&mut s, 0, &[det(0, &[1.0, 0.0])]);
        let moved = BitMask::rect(W, H, 30, 4, 6, 6).unwrap();
        let out = run(&mut s, 1, &[det(30, &[0.0, 1.0]).with_propagated(1, moved)]);
        assert_eq!(out.assignments, vec![Some(1)]);
    }

    #[test]
    fn unmatched_opens_new_track_and_old_retires() {
        let mut s = TrackerState::new(
            TrackerConfig {
                max_age: 1,
                ..cfg()
            },
            ClassTable::kitti_step(),
        )
        .unwrap();
        run(&mut s, 0, &[det(0, &[1.0, 0.0])]);
        let out = run(&mut s, 1, &[det(30, &[0.0, 1.0])]);
        assert_eq!(out.assignments, vec![Some(2)]);
        assert_eq!(s.tracks()[&1].age, 1);
        let out = run(&mut s, 3, &[]);
        assert_eq!(out.report.retired, 2);
        assert!(s.tracks().is_empty());
        let out = run(&mut s, 4, &[det(0, &[1.0, 0.0])]);
        assert_eq!(out.assignments, vec![Some(3)]);
    }

    #[test]
    fn frame_order_and_embedding_length_checked() {
        let mut s = state();
        run(&mut s, 2, &[]);
        assert!(matches!(
            s.step(2, &[], &semantic(&[])),
            Err(Error::FrameOrder {
                previous: 2,
                found: 2
            })
        ));
        let d = [det(0, &[1.0, 0.0, 0.0])];
        assert!(s.step(3, &d, &semantic(&d)).is_err());
    }

    #[test]
    fn output_geometry_equals_resolution() {
        let t = ClassTable::kitti_step();
        let mut s = TrackerState::new(
            TrackerConfig {
                max_age: 0,
                ..cfg()
            },
            t.clone(),
        )
        .unwrap();
        let dets = vec![det(0, &[1.0, 0.0]), det(3, &[0.0, 1.0])];
        let sem = semantic(&dets);
        let out = s.step(0, &dets, &sem).unwrap();
        let resolved = resolve_panoptic(&sem, &dets, &t, cfg().min_area).unwrap();
        assert_eq!(out.map.classes(), resolved.classes());
        for i in 0..dets.len() {
            let id = out.assignments[i].unwrap();
            assert_eq!(out.map.mask_of(13, id), resolved.mask_of(13, i as u32 + 1));
        }
    }

    #[test]
    fn deterministic() {
        let dets = vec![det(0, &[1.0, 0.0]), det(20, &[0.0, 1.0])];
        let mut a = state();
        let mut b = state();
        let oa = run(&mut a, 0, &dets);
        let ob = run(&mut b, 0, &dets);
        assert_eq!(oa.map, ob.map);
        assert_eq!(a, b);
    }
}
