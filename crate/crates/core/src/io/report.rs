use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{ClassIou, ClassPq, Counts, Headline, MetricReport, TrackScore};
use crate::TOOL_VERSION;

use super::write_json;

pub const REPORT_SCHEMA: &str = "panoptrack-report/1";

/// How per-sequence results are pooled into a dataset-level report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationWeights {
    pub pq: String,
    pub sq: String,
    pub aq: String,
    pub tq: String,
}

impl Default for AggregationWeights {
    fn default() -> Self {
        AggregationWeights {
            pq: "segments: tp/fp/fn and IoU sums pooled per class".into(),
            sq: "pixels: intersection and union pooled per class".into(),
            aq: "pixels: track AS weighted by ground-truth tube volume".into(),
            tq: "tracks: unweighted mean over ground-truth tracks".into(),
        }
    }
}

/// On-disk form of a [`MetricReport`]. Field order is the key order of the
/// written JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub tool_version: String,
    /// Sequence name, or `"dataset"` for an aggregate.
    pub scope: String,
    pub headline: Headline,
    pub pq_sq: f64,
    pub rq: f64,
    pub vacuous_tracking: bool,
    pub counts: Counts,
    pub aggregation: AggregationWeights,
    pub per_class_pq: Vec<ClassPq>,
    pub per_class_iou: Vec<ClassIou>,
    pub tracks: Vec<TrackScore>,
    pub config: serde_json::Value,
}

impl ReportDocument {
    pub fn new(report: &MetricReport, scope: &str, config: serde_json::Value) -> Self {
        ReportDocument {
            schema: REPORT_SCHEMA.into(),
            tool_version: TOOL_VERSION.into(),
            scope: scope.into(),
            headline: report.headline(),
            pq_sq: report.pq.sq,
            rq: report.pq.rq,
            vacuous_tracking: report.vacuous_tracking,
            counts: report.counts,
            aggregation: AggregationWeights::default(),
            per_class_pq: report.pq.classes.clone(),
            per_class_iou: report.semantic.classes.clone(),
            tracks: report.tracks.clone(),
            config,
        }
    }
}

pub fn write_report(
    report: &MetricReport,
    scope: &str,
    config: serde_json::Value,
    path: &Path,
) -> Result<()> {
    write_json(&ReportDocument::new(report, scope, config), path)
}
