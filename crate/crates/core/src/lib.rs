//! Panoptic tracking toolkit.
//!
//! `panoptrack` evaluates video panoptic segmentation with instance tracking
//! (PQ, SQ, AQ, STQ, AS, TQ and PAT), fuses semantic and instance evidence into
//! panoptic frames, associates instances across frames with a two-stage
//! motion-then-appearance matcher, and generates deterministic synthetic
//! sequences that serve as ground truth for all of the above.
//!
//! The crate is organised bottom-up:
//!
//! * [`mask`], [`rle`], [`iou`], [`panoptic`] and [`track`] hold the raster
//!   primitives (bit masks, run-length codec, overlap measures, panoptic maps,
//!   per-object tubes).
//! * [`metrics`] implements the metric family and the loss/similarity terms.
//! * [`tracker`] implements fused-logit panoptic fusion and ID association.
//! * [`sim`] generates sequences and perturbs them.
//! * [`io`] reads and writes panoptic PNGs, detection files and reports.
//!
//! The guide under `book/` walks through each of these with runnable
//! snippets; every snippet is compiled and run as a doctest of this crate.

pub mod classes;
pub mod embedding;
pub mod error;
pub mod io;
pub mod iou;
pub mod mask;
pub mod metrics;
pub mod panoptic;
pub mod rle;
pub mod sim;
pub mod track;
pub mod tracker;

mod numeric;

pub use classes::{ClassEntry, ClassId, ClassTable};
pub use embedding::Embedding;
pub use error::{Error, Result};
pub use iou::{mask_iou, soft_iou, tube_iou};
pub use mask::{BitMask, ProbMask};
pub use panoptic::{extract_segments, InstanceId, PanopticMap, Segment, Sequence};
pub use rle::{rle_decode, rle_encode, RleMask};
pub use track::{Track, TrackId};

/// Version string embedded in reports and manifests.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/masks.md")]
    mod masks {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/association.md")]
    mod association {}
    #[doc = include_str!("../../../book/src/tracker.md")]
    mod tracker {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
