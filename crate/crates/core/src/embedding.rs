//! Fixed-length appearance embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "embedding component {i} is not finite"
            )));
        }
        Ok(Embedding(values))
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

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    /// Unit-length copy, or an error for the zero vector.
    pub fn normalized(&self) -> Result<Embedding> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Embedding(self.0.iter().map(|v| v / n).collect()))
    }

    /// Component-wise mean of a non-empty set of equal-length embeddings.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Embedding>) -> Result<Embedding> {
        let mut iter = items.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidValue("mean of no embeddings".into()))?;
        let mut acc = first.0.clone();
        let mut n = 1usize;
        for e in iter {
            if e.len() != acc.len() {
                return Err(Error::LengthMismatch {
                    expected: acc.len(),
                    found: e.len(),
                });
            }
            for (a, v) in acc.iter_mut().zip(&e.0) {
                *a += v;
            }
            n += 1;
        }
        acc.iter_mut().for_each(|a| *a /= n as f64);
        Ok(Embedding(acc))
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Embedding::new(values)
    }
}
