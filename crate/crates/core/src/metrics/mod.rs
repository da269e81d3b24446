//! Panoptic tracking metrics and the loss/similarity terms used to train
//! and associate instance embeddings.
//!
//! | metric | meaning |
//! |--------|---------|
//! | PQ  | panoptic quality, unique matching at IoU > 0.5 per frame |
//! | SQ  | per-class IoU accumulated over the sequence, averaged over classes |
//! | AQ  | tube-overlap weighted association quality |
//! | STQ | `sqrt(AQ * SQ)` |
//! | AS  | association score of one ground-truth track |
//! | TQ  | `sqrt((1 - IDS/N_IDS) * AS)` averaged over tracks |
//! | PAT | harmonic mean of PQ and TQ |
//!
//! Pixels labelled with the class table's ignore class are excluded from all
//! of them.

mod accumulate;
mod association;
mod combine;
mod loss;
mod pq;
mod report;
mod semantic;

use serde::{Deserialize, Serialize};

pub use association::{
    compute_aq, compute_as, compute_tq, count_id_switches, track_quality, IdSwitches, TrackQuality,
    TrackScore,
};
pub use combine::{compute_pat, compute_stq};
pub use loss::{
    appearance_matching_loss, cosine_similarity, motion_loss, semantic_bootstrap_loss,
    semantic_bootstrap_loss_batch, MotionKey, ProbMap, DEFAULT_APPEARANCE_TEMPERATURE,
    PROBABILITY_EPSILON,
};
pub use pq::{compute_pq, ClassPq, PqStats};
pub use report::{aggregate_reports, evaluate_sequence, Counts, Headline, MetricReport};
pub use semantic::{compute_sq, ClassIou, SemanticStats};

/// IoU a predicted segment must exceed to match a ground-truth segment.
pub const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Restrict association (AS/AQ overlaps and ID-switch matching) to
    /// predictions of the ground-truth track's own class. Off by default:
    /// tubes are compared at the ID level.
    pub class_aware_association: bool,
}
