use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classes::ClassId;
use crate::error::Result;
use crate::numeric::{ratio, CompensatedSum};
use crate::panoptic::Sequence;

use super::accumulate::Accumulator;
use super::association::{association_score, IdSwitches, TrackScore};
use super::combine::{compute_pat, compute_stq};
use super::pq::{ClassPq, PqStats};
use super::semantic::{ClassIou, SemanticStats};
use super::EvalConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub pq: f64,
    pub sq: f64,
    pub aq: f64,
    pub stq: f64,
    pub tq: f64,
    pub pat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub sequences: u64,
    pub frames: u64,
    pub gt_tracks: u64,
    pub pred_tracks: u64,
}

/// Every metric of one evaluation, with the counts needed to recompute or
/// aggregate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pq: PqStats,
    pub semantic: SemanticStats,
    pub aq: f64,
    pub stq: f64,
    pub tq: f64,
    pub pat: f64,
    pub tracks: Vec<TrackScore>,
    pub counts: Counts,
    /// No ground-truth tracks were present; AQ and TQ are reported as 1.
    pub vacuous_tracking: bool,
}

impl MetricReport {
    fn assemble(
        pq: PqStats,
        semantic: SemanticStats,
        aq: f64,
        tq: f64,
        tracks: Vec<TrackScore>,
        counts: Counts,
        vacuous_tracking: bool,
    ) -> Result<Self> {
        let stq = compute_stq(aq, semantic.mean)?;
        let pat = compute_pat(pq.pq, tq)?;
        Ok(MetricReport {
            pq,
            semantic,
            aq,
            stq,
            tq,
            pat,
            tracks,
            counts,
            vacuous_tracking,
        })
    }

    pub fn headline(&self) -> Headline {
        Headline {
            pq: self.pq.pq,
            sq: self.semantic.mean,
            aq: self.aq,
            stq: self.stq,
            tq: self.tq,
            pat: self.pat,
        }
    }
}

/// Evaluates `pred` against `gt`, filling every field of the report.
pub fn evaluate_sequence(gt: &Sequence, pred: &Sequence, cfg: EvalConfig) -> Result<MetricReport> {
    gt.check_compatible(pred)?;
    let mut acc = Accumulator::new(gt.class_table(), cfg);
    for (g, p) in gt.frames().iter().zip(pred.frames()) {
        acc.add_frame(g, p);
    }

    let pq = PqStats::from_accumulator(&acc.classes);
    let semantic = SemanticStats::from_accumulator(&acc.classes);

    let tracks: Vec<TrackScore> = acc
        .gt_tracks
        .iter()
        .map(|(&id, t)| {
            let as_score = association_score(
                t.pixels,
                t.overlaps
                    .iter()
                    .map(|(p, &tpa)| (tpa, acc.pred_tubes[p].pixels)),
            );
            let matches: Vec<_> = t.matches.iter().map(|&(_, m)| m).collect();
            TrackScore::new(
                id,
                t.class_id,
                t.pixels,
                as_score,
                IdSwitches::from_matches(&matches),
            )
        })
        .collect();
    let vacuous = tracks.is_empty();
    let (aq, tq) = if vacuous {
        (1.0, 1.0)
    } else {
        let n = tracks.len() as f64;
        (
            tracks
                .iter()
                .map(|t| t.as_score)
                .collect::<CompensatedSum>()
                .value()
                / n,
            tracks
                .iter()
                .map(|t| t.tq)
                .collect::<CompensatedSum>()
                .value()
                / n,
        )
    };
    let counts = Counts {
        sequences: 1,
        frames: acc.frames as u64,
        gt_tracks: tracks.len() as u64,
        pred_tracks: acc.pred_tubes.len() as u64,
    };
    MetricReport::assemble(pq, semantic, aq, tq, tracks, counts, vacuous)
}

/// Dataset-level report from per-sequence reports.
///
/// PQ pools segment counts per class, SQ pools pixel counts per class, AQ is
/// weighted by ground-truth tube volume, and TQ by track. Track ids in the
/// result keep their per-sequence values.
pub fn aggregate_reports(reports: &[MetricReport]) -> Result<MetricReport> {
    let mut pq: BTreeMap<ClassId, (u64, u64, u64, CompensatedSum)> = BTreeMap::new();
    let mut sem: BTreeMap<ClassId, (u64, u64, u64)> = BTreeMap::new();
    let mut tracks = Vec::new();
    let mut counts = Counts {
        sequences: 0,
        frames: 0,
        gt_tracks: 0,
        pred_tracks: 0,
    };
    for r in reports {
        for c in &r.pq.classes {
            let e = pq.entry(c.class_id).or_default();
            e.0 += c.tp;
            e.1 += c.fp;
            e.2 += c.fn_;
            e.3.add(c.iou_sum);
        }
        for c in &r.semantic.classes {
            let e = sem.entry(c.class_id).or_default();
            let pred_pixels = c.union + c.intersection - c.gt_pixels;
            e.0 += c.intersection;
            e.1 += c.gt_pixels;
            e.2 += pred_pixels;
        }
        tracks.extend(r.tracks.iter().cloned());
        counts.sequences += r.counts.sequences;
        counts.frames += r.counts.frames;
        counts.gt_tracks += r.counts.gt_tracks;
        counts.pred_tracks += r.counts.pred_tracks;
    }
    let pq = PqStats::from_classes(
        pq.into_iter()
            .map(|(c, (tp, fp, fn_, s))| ClassPq::from_counts(c, tp, fp, fn_, s.value()))
            .collect(),
    );
    let semantic = SemanticStats::from_classes(
        sem.into_iter()
            .map(|(c, (i, g, p))| ClassIou::from_counts(c, i, g, p))
            .collect(),
    );
    let vacuous = tracks.is_empty();
    let (aq, tq) = if vacuous {
        (1.0, 1.0)
    } else {
        let volume: u64 = tracks.iter().map(|t| t.gt_pixels).sum();
        let weighted: CompensatedSum = tracks
            .iter()
            .map(|t| t.as_score * t.gt_pixels as f64)
            .collect();
        let tq_sum: CompensatedSum = tracks.iter().map(|t| t.tq).collect();
        (
            ratio(weighted.value(), volume as f64).min(1.0),
            tq_sum.value() / tracks.len() as f64,
        )
    };
    MetricReport::assemble(pq, semantic, aq, tq, tracks, counts, vacuous)
}
