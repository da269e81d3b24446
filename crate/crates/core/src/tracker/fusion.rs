//! Panoptic fusion of instance masks with semantic logits.

use crate::classes::{ClassId, ClassTable};
use crate::error::{Error, Result};
use crate::mask::{check_dims, BitMask};
use crate::panoptic::PanopticMap;

use super::detection::Detection;

/// Logit magnitude assigned to a binary mask or a hard class label.
pub const HARD_LOGIT: f64 = 4.0;

/// Default minimum pixel count a detection must keep after overlap
/// resolution.
pub const DEFAULT_MIN_AREA: u64 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct LogitsMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl LogitsMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("logit is not finite".into()));
        }
        Ok(LogitsMap {
            width,
            height,
            values,
        })
    }

    /// `+HARD_LOGIT` inside the mask, `-HARD_LOGIT` outside.
    pub fn from_mask(mask: &BitMask) -> Self {
        let (w, h) = mask.dims();
        let mut values = Vec::with_capacity(mask.pixel_count());
        for y in 0..h {
            for x in 0..w {
                values.push(if mask.get(x, y) {
                    HARD_LOGIT
                } else {
                    -HARD_LOGIT
                });
            }
        }
        LogitsMap {
            width: w,
            height: h,
            values,
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(sigmoid(a) + sigmoid(b)) * (a + b)` for one pixel.
pub fn fused_logit(a: f64, b: f64) -> f64 {
    (sigmoid(a) + sigmoid(b)) * (a + b)
}

/// Element-wise [`fused_logit`] of two maps.
///
/// ```
/// use panoptrack::tracker::{fuse_logits, LogitsMap};
///
/// let a = LogitsMap::new(1, 1, vec![2.0]).unwrap();
/// let fl = fuse_logits(&a, &a).unwrap();
/// assert!((fl.values()[0] - 7.0464).abs() < 1e-3);
/// ```
pub fn fuse_logits(ml_a: &LogitsMap, ml_b: &LogitsMap) -> Result<LogitsMap> {
    if ml_a.dims() != ml_b.dims() {
        return Err(Error::DimensionMismatch {
            expected: ml_a.dims(),
            found: ml_b.dims(),
        });
    }
    Ok(LogitsMap {
        width: ml_a.width,
        height: ml_a.height,
        values: ml_a
            .values
            .iter()
            .zip(&ml_b.values)
            .map(|(&a, &b)| fused_logit(a, b))
            .collect(),
    })
}

/// One logit map per class of a class table, in table order.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticLogits {
    class_ids: Vec<ClassId>,
    maps: Vec<LogitsMap>,
}

impl SemanticLogits {
    pub fn new(table: &ClassTable, maps: Vec<LogitsMap>) -> Result<Self> {
        if maps.len() != table.len() {
            return Err(Error::LengthMismatch {
                expected: table.len(),
                found: maps.len(),
            });
        }
        if let Some(m) = maps.iter().find(|m| m.dims() != maps[0].dims()) {
            return Err(Error::DimensionMismatch {
                expected: maps[0].dims(),
                found: m.dims(),
            });
        }
        Ok(SemanticLogits {
            class_ids: table.entries().iter().map(|e| e.id).collect(),
            maps,
        })
    }

    /// Hard logits from a class map: `+HARD_LOGIT` for the labelled class,
    /// `-HARD_LOGIT` for every other.
    pub fn from_class_map(map: &PanopticMap, table: &ClassTable) -> Result<Self> {
        let mut values = vec![vec![-HARD_LOGIT; map.pixel_count()]; table.len()];
        for (i, &c) in map.classes().iter().enumerate() {
            let k = table.index_of(c).ok_or(Error::UnknownClass(c))?;
            values[k][i] = HARD_LOGIT;
        }
        let maps = values
            .into_iter()
            .map(|v| LogitsMap {
                width: map.width(),
                height: map.height(),
                values: v,
            })
            .collect();
        SemanticLogits::new(table, maps)
    }

    pub fn dims(&self) -> (u32, u32) {
        self.maps[0].dims()
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.class_ids
    }

    pub fn class_map(&self, class: ClassId) -> Option<&LogitsMap> {
        self.class_ids
            .iter()
            .position(|&c| c == class)
            .map(|k| &self.maps[k])
    }

    /// Highest-logit class per pixel, ties going to the earlier class.
    pub fn argmax(&self) -> Vec<ClassId> {
        let n = self.maps[0].values.len();
        (0..n)
            .map(|i| {
                let mut best = 0;
                for k in 1..self.maps.len() {
                    if self.maps[k].values[i] > self.maps[best].values[i] {
                        best = k;
                    }
                }
                self.class_ids[best]
            })
            .collect()
    }
}

/// Pixels claimed by each detection after overlap resolution, and the
/// semantic background underneath.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub background: Vec<ClassId>,
    /// `None` for detections that fell below the minimum area.
    pub claims: Vec<Option<BitMask>>,
}

impl Resolution {
    /// Paints each surviving detection with the instance id chosen by `ids`.
    pub fn render(
        &self,
        dims: (u32, u32),
        detections: &[Detection],
        mut ids: impl FnMut(usize) -> u32,
    ) -> Result<PanopticMap> {
        let (w, h) = dims;
        let n = self.background.len();
        let mut map = PanopticMap::new(w, h, self.background.clone(), vec![0; n])?;
        for (i, claim) in self.claims.iter().enumerate() {
            if let Some(mask) = claim {
                map.paint(mask, detections[i].class_id, ids(i))?;
            }
        }
        Ok(map)
    }
}

/// Assigns pixels to detections in descending score order (index breaks
/// ties). A detection claims a free pixel where the fusion of its mask logit
/// and the semantic logit of its class is positive; detections left with
/// fewer than `min_area` pixels are dropped.
pub fn resolve_detections(
    semantic: &SemanticLogits,
    detections: &[Detection],
    table: &ClassTable,
    min_area: u64,
) -> Result<Resolution> {
    let dims = semantic.dims();
    let (w, h) = dims;
    for d in detections {
        d.validate()?;
        if d.mask.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: d.mask.dims(),
            });
        }
        if !table.is_thing(d.class_id) {
            return Err(Error::InvalidValue(format!(
                "detection class {} is not a thing class",
                d.class_id
            )));
        }
    }
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then(a.cmp(&b))
    });

    let mut taken = BitMask::new(w, h)?;
    let mut claims = vec![None; detections.len()];
    for i in order {
        let d = &detections[i];
        let sem = semantic
            .class_map(d.class_id)
            .ok_or(Error::UnknownClass(d.class_id))?;
        let mut claim = BitMask::new(w, h)?;
        for y in 0..h {
            for x in 0..w {
                if taken.get(x, y) {
                    continue;
                }
                let a = if d.mask.get(x, y) {
                    HARD_LOGIT
                } else {
                    -HARD_LOGIT
                };
                let b = sem.values[(y * w + x) as usize];
                if fused_logit(a, b) > 0.0 {
                    claim.set(x, y, true);
                }
            }
        }
        if claim.count() >= min_area.max(1) {
            taken.union_with(&claim)?;
            claims[i] = Some(claim);
        }
    }
    Ok(Resolution {
        background: semantic.argmax(),
        claims,
    })
}

/// Panoptic map with detection `i` labelled as instance `i + 1`.
pub fn resolve_panoptic(
    semantic: &SemanticLogits,
    detections: &[Detection],
    table: &ClassTable,
    min_area: u64,
) -> Result<PanopticMap> {
    resolve_detections(semantic, detections, table, min_area)?.render(
        semantic.dims(),
        detections,
        |i| i as u32 + 1,
    )
}
