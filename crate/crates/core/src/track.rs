//! Per-object mask tubes.

use std::collections::BTreeMap;

use crate::classes::ClassId;
use crate::error::{Error, Result};
use crate::mask::BitMask;

/// Identifier shared by all masks of one object over time.
pub type TrackId = u32;

/// One object's masks, keyed by frame index, under a single ID and class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    track_id: TrackId,
    class_id: ClassId,
    masks: BTreeMap<usize, BitMask>,
}

impl Track {
    /// # Panics
    ///
    /// Panics if `track_id` is zero; zero is reserved for "no instance".
    pub fn new(track_id: TrackId, class_id: ClassId) -> Self {
        assert!(track_id > 0, "track ids are positive");
        Track {
            track_id,
            class_id,
            masks: BTreeMap::new(),
        }
    }

    pub fn track_id(&self) -> TrackId {
        self.track_id
    }

    pub fn class_id(&self) -> ClassId {
        self.class_id
    }

    /// Adds the mask for `frame`. Frames may be inserted in any order but
    /// only once, and all masks must share dimensions.
    pub fn insert(&mut self, frame: usize, mask: BitMask) -> Result<()> {
        if let Some(d) = self.dims() {
            if d != mask.dims() {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: mask.dims(),
                });
            }
        }
        if self.masks.contains_key(&frame) {
            return Err(Error::InvalidTrack(format!(
                "track {} already has frame {frame}",
                self.track_id
            )));
        }
        self.masks.insert(frame, mask);
        Ok(())
    }

    pub fn dims(&self) -> Option<(u32, u32)> {
        self.masks.values().next().map(BitMask::dims)
    }

    pub fn get(&self, frame: usize) -> Option<&BitMask> {
        self.masks.get(&frame)
    }

    pub fn masks(&self) -> &BTreeMap<usize, BitMask> {
        &self.masks
    }

    /// Frame indices in increasing order.
    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.masks.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Total tube volume in pixels.
    pub fn pixel_count(&self) -> u64 {
        self.masks.values().map(BitMask::count).sum()
    }

    /// Tube overlap `Σ_t |a_t ∩ b_t|` over the frames both tracks contain.
    pub fn intersection_count(&self, other: &Track) -> Result<u64> {
        let mut total = 0;
        for (frame, mask) in &self.masks {
            if let Some(o) = other.masks.get(frame) {
                total += mask.intersection_count(o)?;
            }
        }
        Ok(total)
    }
}
