//! Training-signal terms: the bootstrapped semantic loss, the motion loss
//! over propagated masks, and the similarity and matching loss over
//! instance embeddings.

use std::collections::BTreeMap;

use crate::classes::ClassTable;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::iou::soft_iou;
use crate::mask::{check_dims, BitMask, ProbMask};
use crate::numeric::CompensatedSum;
use crate::panoptic::PanopticMap;

/// Lower clamp applied to a true-class probability before taking its log.
pub const PROBABILITY_EPSILON: f64 = 1e-12;

pub const DEFAULT_APPEARANCE_TEMPERATURE: f64 = 0.1;

/// `(instance id, frame index)`.
pub type MotionKey = (u32, usize);

/// Per-pixel class probabilities, pixel-major, with one entry per class in
/// class-table order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    width: u32,
    height: u32,
    classes: usize,
    values: Vec<f64>,
}

impl ProbMap {
    pub fn new(width: u32, height: u32, table: &ClassTable, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        let classes = table.len();
        let expected = width as usize * height as usize * classes;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        for (i, px) in values.chunks_exact(classes).enumerate() {
            if px.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidValue(format!(
                    "pixel {i} has a negative or non-finite probability"
                )));
            }
            let s: f64 = px.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidValue(format!(
                    "pixel {i} probabilities sum to {s}"
                )));
            }
        }
        Ok(ProbMap {
            width,
            height,
            classes,
            values,
        })
    }

    /// Puts probability `confidence` on each pixel's class in `map` and
    /// spreads the rest evenly over the other classes.
    pub fn from_labels(map: &PanopticMap, table: &ClassTable, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidValue(format!("confidence {confidence}")));
        }
        let c = table.len();
        let rest = if c > 1 {
            (1.0 - confidence) / (c - 1) as f64
        } else {
            0.0
        };
        let confidence = if c > 1 { confidence } else { 1.0 };
        let mut values = Vec::with_capacity(map.pixel_count() * c);
        for &class in map.classes() {
            let k = table.index_of(class).ok_or(Error::UnknownClass(class))?;
            values.extend((0..c).map(|j| if j == k { confidence } else { rest }));
        }
        ProbMap::new(map.width(), map.height(), table, values)
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.values[index * self.classes..(index + 1) * self.classes]
    }
}

/// Log-loss over the worst quarter of pixels of one image.
///
/// Pixels are ranked by the negative log-probability of their true class;
/// the `max(1, floor(W*H/4))` largest contribute with weight `4/(W*H)`, ties
/// at the cutoff going to the lower pixel index. Ignore-class pixels are
/// never selected.
pub fn semantic_bootstrap_loss(
    prob: &ProbMap,
    gt: &PanopticMap,
    table: &ClassTable,
) -> Result<f64> {
    if prob.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            found: prob.dims(),
        });
    }
    if prob.class_count() != table.len() {
        return Err(Error::ClassTableMismatch);
    }
    let n = gt.pixel_count();
    let mut nll = Vec::with_capacity(n);
    for (i, &class) in gt.classes().iter().enumerate() {
        if table.is_ignore(class) {
            continue;
        }
        let k = table.index_of(class).ok_or(Error::UnknownClass(class))?;
        let p = prob.pixel(i)[k].max(PROBABILITY_EPSILON);
        nll.push((-p.ln(), i));
    }
    let k = (n / 4).max(1).min(nll.len());
    nll.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let sum: CompensatedSum = nll[..k].iter().map(|&(v, _)| v).collect();
    Ok((4.0 / n as f64 * sum.value()).max(0.0))
}

/// Mean of [`semantic_bootstrap_loss`] over a batch of images.
pub fn semantic_bootstrap_loss_batch(
    items: &[(ProbMap, PanopticMap)],
    table: &ClassTable,
) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::InvalidValue("empty batch".into()));
    }
    let mut sum = CompensatedSum::default();
    for (p, g) in items {
        sum.add(semantic_bootstrap_loss(p, g, table)?);
    }
    Ok(sum.value() / items.len() as f64)
}

/// `sum(1 - soft_iou)` over aligned `(instance, frame)` pairs.
pub fn motion_loss(
    propagated: &BTreeMap<MotionKey, ProbMask>,
    gt: &BTreeMap<MotionKey, BitMask>,
) -> Result<f64> {
    if let Some(k) = propagated
        .keys()
        .find(|k| !gt.contains_key(k))
        .or_else(|| gt.keys().find(|k| !propagated.contains_key(k)))
    {
        return Err(Error::InvalidValue(format!(
            "motion key (instance {}, frame {}) is not present on both sides",
            k.0, k.1
        )));
    }
    let mut sum = CompensatedSum::default();
    for (k, p) in propagated {
        sum.add(1.0 - soft_iou(p, &ProbMask::from(&gt[k]))?);
    }
    Ok(sum.value())
}

/// Cosine of the angle between two embeddings, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    let dot = a.dot(b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Binary cross-entropy with the cosine similarity of each pair, divided by
/// `temperature`, as the logit of "same track". Summed over pairs.
pub fn appearance_matching_loss(
    pairs: &[(Embedding, Embedding)],
    same_track: &[bool],
    track_count: usize,
    temperature: f64,
) -> Result<f64> {
    if pairs.len() != same_track.len() {
        return Err(Error::LengthMismatch {
            expected: pairs.len(),
            found: same_track.len(),
        });
    }
    if track_count == 0 {
        return Err(Error::InvalidValue("track_count must be at least 1".into()));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidValue(format!("temperature {temperature}")));
    }
    let mut sum = CompensatedSum::default();
    for ((a, b), &y) in pairs.iter().zip(same_track) {
        let z = cosine_similarity(a, b)? / temperature;
        sum.add(if y { softplus(-z) } else { softplus(z) });
    }
    Ok(sum.value())
}
