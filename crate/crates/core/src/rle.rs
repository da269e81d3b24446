//! Run-length codec for binary masks.
//!
//! Runs walk the pixels in row-major order and alternate background and
//! foreground, starting with background. A mask whose first pixel is
//! foreground therefore starts with a zero-length run; no other run may be
//! empty. This layout is fixed so that serialized masks are portable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{check_dims, BitMask};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RleDoc", into = "RleDoc")]
pub struct RleMask {
    width: u32,
    height: u32,
    runs: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RleDoc {
    width: u32,
    height: u32,
    counts: Vec<u64>,
}

impl TryFrom<RleDoc> for RleMask {
    type Error = Error;
    fn try_from(doc: RleDoc) -> Result<Self> {
        RleMask::from_runs(doc.width, doc.height, doc.counts)
    }
}

impl From<RleMask> for RleDoc {
    fn from(rle: RleMask) -> Self {
        RleDoc {
            width: rle.width,
            height: rle.height,
            counts: rle.runs,
        }
    }
}

impl RleMask {
    /// Validates and wraps a run list.
    pub fn from_runs(width: u32, height: u32, runs: Vec<u64>) -> Result<Self> {
        check_dims(width, height).map_err(|e| Error::MalformedRle(e.to_string()))?;
        let total: u64 = runs.iter().sum();
        let expected = width as u64 * height as u64;
        if total != expected {
            return Err(Error::MalformedRle(format!(
                "runs sum to {total}, expected {width}x{height} = {expected}"
            )));
        }
        if let Some(i) = runs.iter().skip(1).position(|&r| r == 0) {
            return Err(Error::MalformedRle(format!(
                "zero-length run at position {}",
                i + 1
            )));
        }
        Ok(RleMask {
            width,
            height,
            runs,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn runs(&self) -> &[u64] {
        &self.runs
    }

    /// Foreground pixel count (sum of the odd-indexed runs).
    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).sum()
    }
}

pub fn rle_encode(mask: &BitMask) -> RleMask {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u64;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let v = mask.get(x, y);
            if v != current {
                runs.push(len);
                len = 0;
                current = v;
            }
            len += 1;
        }
    }
    runs.push(len);
    RleMask {
        width: mask.width(),
        height: mask.height(),
        runs,
    }
}

pub fn rle_decode(rle: &RleMask) -> BitMask {
    let mut mask = BitMask::new(rle.width, rle.height).expect("validated dimensions");
    let w = rle.width as u64;
    let mut pos = 0u64;
    for (i, &run) in rle.runs.iter().enumerate() {
        if i % 2 == 1 {
            let end = pos + run;
            let mut p = pos;
            while p < end {
                let y = p / w;
                let x0 = p % w;
                let x1 = (x0 + (end - p)).min(w);
                mask.fill_row_span(y as u32, x0 as u32, x1 as u32);
                p += x1 - x0;
            }
        }
        pos += run;
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        let empty = BitMask::new(2, 2).unwrap();
        assert_eq!(rle_encode(&empty).runs(), &[4]);
        let full = BitMask::from_fn(2, 2, |_, _| true).unwrap();
        assert_eq!(rle_encode(&full).runs(), &[0, 4]);
        let fbf = BitMask::from_bools(3, 1, &[true, false, true]).unwrap();
        assert_eq!(rle_encode(&fbf).runs(), &[0, 1, 1, 1]);
    }

    #[test]
    fn decode_examples() {
        let r = RleMask::from_runs(2, 2, vec![4]).unwrap();
        assert!(rle_decode(&r).is_empty());
        let r = RleMask::from_runs(2, 2, vec![0, 4]).unwrap();
        assert_eq!(rle_decode(&r).count(), 4);
        let r = RleMask::from_runs(2, 2, vec![1, 2, 1]).unwrap();
        assert_eq!(rle_decode(&r).to_bools(), vec![false, true, true, false]);
    }

    #[test]
    fn malformed_runs_rejected() {
        assert!(matches!(
            RleMask::from_runs(2, 2, vec![1, 2]),
            Err(Error::MalformedRle(_))
        ));
        assert!(RleMask::from_runs(2, 2, vec![1, 0, 3]).is_err());
        assert!(RleMask::from_runs(2, 2, vec![4, 0]).is_err());
        assert!(RleMask::from_runs(0, 2, vec![]).is_err());
    }

    #[test]
    fn run_spanning_rows_decodes() {
        let r = RleMask::from_runs(3, 3, vec![2, 5, 2]).unwrap();
        let m = rle_decode(&r);
        assert_eq!(
            m.to_bools(),
            vec![false, false, true, true, true, true, true, false, false]
        );
        assert_eq!(r.area(), 5);
    }

    #[test]
    fn serde_validates() {
        let ok: RleMask = serde_json::from_str(r#"{"width":2,"height":1,"counts":[1,1]}"#).unwrap();
        assert_eq!(ok.area(), 1);
        assert!(serde_json::from_str::<RleMask>(r#"{"width":2,"height":1,"counts":[1]}"#).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(w in 1u32..90, h in 1u32..5, seed in proptest::collection::vec(any::<bool>(), 450)) {
            let bits: Vec<bool> = seed.iter().cycle().take((w * h) as usize).copied().collect();
            let m = BitMask::from_bools(w, h, &bits).unwrap();
            let rle = rle_encode(&m);
            prop_assert_eq!(rle.runs().iter().sum::<u64>(), (w * h) as u64);
            prop_assert!(rle.runs().iter().skip(1).all(|&r| r > 0));
            prop_assert_eq!(rle.area(), m.count());
            prop_assert_eq!(rle_decode(&rle), m);
        }
    }
}
