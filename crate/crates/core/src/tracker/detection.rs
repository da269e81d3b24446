use crate::classes::ClassId;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::mask::BitMask;
use crate::track::TrackId;

/// Mask of an existing track carried into the current frame by the motion
/// head.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedMask {
    pub track_id: TrackId,
    pub mask: BitMask,
}

/// One instance hypothesis in the current frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub mask: BitMask,
    pub class_id: ClassId,
    pub score: f64,
    pub embedding: Embedding,
    pub propagated: Option<PropagatedMask>,
    /// Displacement `(dx, dy)` of this object since the previous frame.
    pub offset: Option<(i64, i64)>,
}

impl Detection {
    pub fn new(mask: BitMask, class_id: ClassId, score: f64, embedding: Embedding) -> Result<Self> {
        let d = Detection {
            mask,
            class_id,
            score,
            embedding,
            propagated: None,
            offset: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_offset(mut self, dx: i64, dy: i64) -> Self {
        self.offset = Some((dx, dy));
        self
    }

    pub fn with_propagated(mut self, track_id: TrackId, mask: BitMask) -> Self {
        self.propagated = Some(PropagatedMask { track_id, mask });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mask.is_empty() {
            return Err(Error::InvalidValue("detection mask is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidValue(format!(
                "detection score {} outside [0, 1]",
                self.score
            )));
        }
        if let Some(p) = &self.propagated {
            if p.mask.dims() != self.mask.dims() {
                return Err(Error::DimensionMismatch {
                    expected: self.mask.dims(),
                    found: p.mask.dims(),
                });
            }
            if p.track_id == 0 {
                return Err(Error::InvalidValue("propagated track id 0".into()));
            }
        }
        Ok(())
    }
}

/// Plain feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(
                "feature component is not finite".into(),
            ));
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Motion-enhanced appearance feature `w_a * f_a + w_p * f_p`.
pub fn combine_features(
    f_a: &FeatureVector,
    f_p: &FeatureVector,
    w_a: f64,
    w_p: f64,
) -> Result<FeatureVector> {
    if f_a.len() != f_p.len() {
        return Err(Error::LengthMismatch {
            expected: f_a.len(),
            found: f_p.len(),
        });
    }
    FeatureVector::new(
        f_a.0
            .iter()
            .zip(&f_p.0)
            .map(|(a, p)| w_a * a + w_p * p)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn combine_examples() {
        let a = fv(&[1.0, -2.0, 0.5]);
        let p = fv(&[3.0, 1.0, 1.0]);
        assert_eq!(
            combine_features(&a, &p, 2.0, 0.0).unwrap(),
            fv(&[2.0, -4.0, 1.0])
        );
        assert_eq!(combine_features(&a, &a, 0.5, 0.5).unwrap(), a);
        assert_eq!(
            combine_features(&fv(&[1.0, 0.0]), &fv(&[0.0, 1.0]), 1.0, 1.0).unwrap(),
            fv(&[1.0, 1.0])
        );
        assert!(combine_features(&a, &fv(&[1.0]), 1.0, 1.0).is_err());
    }

    #[test]
    fn detection_validation() {
        let e = Embedding::new(vec![1.0]).unwrap();
        assert!(Detection::new(BitMask::new(4, 4).unwrap(), 13, 0.5, e.clone()).is_err());
        let m = BitMask::rect(4, 4, 0, 0, 2, 2).unwrap();
        assert!(Detection::new(m.clone(), 13, 1.5, e.clone()).is_err());
        let d = Detection::new(m.clone(), 13, 0.5, e)
            .unwrap()
            .with_propagated(3, BitMask::new(5, 4).unwrap());
        assert!(d.validate().is_err());
    }
}
