//! Panoptic label maps, their segments, and sequences of them.

use std::collections::BTreeMap;

use crate::classes::{ClassId, ClassTable};
use crate::error::{Error, Result};
use crate::mask::{check_dims, BitMask};
use crate::track::Track;

/// Per-pixel instance identifier; 0 means "no instance".
pub type InstanceId = u32;

/// Per-pixel `(class, instance)` labelling of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanopticMap {
    width: u32,
    height: u32,
    classes: Vec<ClassId>,
    instances: Vec<InstanceId>,
}

impl PanopticMap {
    pub fn new(
        width: u32,
        height: u32,
        classes: Vec<ClassId>,
        instances: Vec<InstanceId>,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let n = width as usize * height as usize;
        for len in [classes.len(), instances.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        Ok(PanopticMap {
            width,
            height,
            classes,
            instances,
        })
    }

    /// Map with every pixel set to `class` and no instances.
    pub fn filled(width: u32, height: u32, class: ClassId) -> Result<Self> {
        let n = width as usize * height as usize;
        PanopticMap::new(width, height, vec![class; n], vec![0; n])
    }

    /// Checks the map against `table`: known classes only, instances only on
    /// thing classes.
    pub fn validate(&self, table: &ClassTable) -> Result<()> {
        let mut last = None;
        for (&c, &i) in self.classes.iter().zip(&self.instances) {
            if last == Some((c, i)) {
                continue;
            }
            let entry = table.entry(c).ok_or(Error::UnknownClass(c))?;
            if i != 0 && !entry.is_thing {
                return Err(Error::InstanceOnStuff {
                    class: c,
                    instance: i,
                });
            }
            last = Some((c, i));
        }
        Ok(())
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

    pub fn pixel_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn instances(&self) -> &[InstanceId] {
        &self.instances
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> (ClassId, InstanceId) {
        let i = self.idx(x, y);
        (self.classes[i], self.instances[i])
    }

    pub fn set(&mut self, x: u32, y: u32, class: ClassId, instance: InstanceId) {
        let i = self.idx(x, y);
        self.classes[i] = class;
        self.instances[i] = instance;
    }

    /// Writes `(class, instance)` on every foreground pixel of `mask`.
    pub fn paint(&mut self, mask: &BitMask, class: ClassId, instance: InstanceId) -> Result<()> {
        if mask.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: mask.dims(),
            });
        }
        for (x, y) in mask.iter_ones() {
            self.set(x, y, class, instance);
        }
        Ok(())
    }

    /// Pixels labelled `(class, instance)`.
    pub fn mask_of(&self, class: ClassId, instance: InstanceId) -> BitMask {
        let mut mask = BitMask::new(self.width, self.height).expect("valid dims");
        self.for_each_run(|y, x0, x1, c, i| {
            if c == class && i == instance {
                mask.fill_row_span(y, x0, x1);
            }
        });
        mask
    }

    /// Calls `f(y, x0, x1, class, instance)` for every maximal horizontal run
    /// `[x0, x1)` of identical labels.
    pub(crate) fn for_each_run(&self, mut f: impl FnMut(u32, u32, u32, ClassId, InstanceId)) {
        let w = self.width as usize;
        for y in 0..self.height as usize {
            let cs = &self.classes[y * w..(y + 1) * w];
            let is = &self.instances[y * w..(y + 1) * w];
            let mut start = 0;
            for x in 1..=w {
                if x == w || cs[x] != cs[start] || is[x] != is[start] {
                    f(y as u32, start as u32, x as u32, cs[start], is[start]);
                    start = x;
                }
            }
        }
    }
}

/// One connected-by-label region of a panoptic map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub class_id: ClassId,
    pub instance_id: InstanceId,
    pub mask: BitMask,
}

/// Splits a map into one segment per distinct `(class, instance)` label,
/// ordered by label. Ignore-class pixels belong to no segment, so the masks
/// partition the remaining pixels. Stuff classes always carry instance 0 and
/// therefore yield one segment per class present.
pub fn extract_segments(map: &PanopticMap, table: &ClassTable) -> Vec<Segment> {
    let mut masks: BTreeMap<(ClassId, InstanceId), BitMask> = BTreeMap::new();
    map.for_each_run(|y, x0, x1, c, i| {
        if table.is_ignore(c) {
            return;
        }
        masks
            .entry((c, i))
            .or_insert_with(|| BitMask::new(map.width, map.height).expect("valid dims"))
            .fill_row_span(y, x0, x1);
    });
    masks
        .into_iter()
        .map(|((class_id, instance_id), mask)| Segment {
            class_id,
            instance_id,
            mask,
        })
        .collect()
}

/// Ordered frames sharing one grid and one class table.
///
/// Instance ids identify objects for the whole sequence: an id is used under
/// at most one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    frames: Vec<PanopticMap>,
    class_table: ClassTable,
}

impl Sequence {
    pub fn new(frames: Vec<PanopticMap>, class_table: ClassTable) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidValue("a sequence needs at least one frame".into()))?;
        let dims = first.dims();
        let mut owner: BTreeMap<InstanceId, ClassId> = BTreeMap::new();
        for frame in &frames {
            if frame.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: frame.dims(),
                });
            }
            frame.validate(&class_table)?;
            let mut last = None;
            for (&c, &i) in frame.classes.iter().zip(&frame.instances) {
                if i == 0 || last == Some((c, i)) {
                    continue;
                }
                last = Some((c, i));
                let prev = *owner.entry(i).or_insert(c);
                if prev != c {
                    return Err(Error::InstanceClassConflict {
                        instance: i,
                        first: prev,
                        second: c,
                    });
                }
            }
        }
        Ok(Sequence {
            frames,
            class_table,
        })
    }

    pub fn frames(&self) -> &[PanopticMap] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<PanopticMap> {
        self.frames
    }

    pub fn class_table(&self) -> &ClassTable {
        &self.class_table
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.frames[0].dims()
    }

    /// Checks that `other` can be compared pixel-for-pixel with `self`.
    pub fn check_compatible(&self, other: &Sequence) -> Result<()> {
        if self.class_table != other.class_table {
            return Err(Error::ClassTableMismatch);
        }
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    /// Instance tubes of all thing objects (instance id > 0), ordered by id.
    pub fn tracks(&self) -> Vec<Track> {
        let mut tracks: BTreeMap<InstanceId, Track> = BTreeMap::new();
        for (t, frame) in self.frames.iter().enumerate() {
            for seg in extract_segments(frame, &self.class_table) {
                if seg.instance_id == 0 || !self.class_table.is_thing(seg.class_id) {
                    continue;
                }
                tracks
                    .entry(seg.instance_id)
                    .or_insert_with(|| Track::new(seg.instance_id, seg.class_id))
                    .insert(t, seg.mask)
                    .expect("one segment per frame and shared dims");
            }
        }
        tracks.into_values().collect()
    }

    /// Copy of `self` where every pixel that `reference` labels with the
    /// ignore class is set to the ignore class too.
    ///
    /// Association metrics expect predictions masked this way so that void
    /// ground-truth pixels drop out of every predicted tube.
    pub fn mask_ignored(&self, reference: &Sequence) -> Result<Sequence> {
        reference.check_compatible(self)?;
        let Some(ignore) = self.class_table.ignore_id() else {
            return Ok(self.clone());
        };
        let frames = self
            .frames
            .iter()
            .zip(&reference.frames)
            .map(|(p, g)| {
                let mut out = p.clone();
                for (k, &c) in g.classes.iter().enumerate() {
                    if c == ignore {
                        out.classes[k] = ignore;
                        out.instances[k] = 0;
                    }
                }
                out
            })
            .collect();
        Ok(Sequence {
            frames,
            class_table: self.class_table.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::ClassTable;

    const ROAD: ClassId = 0;
    const CAR: ClassId = 13;
    const VOID: ClassId = 255;

    fn two_cars_and_road() -> PanopticMap {
        let mut m = PanopticMap::filled(8, 4, ROAD).unwrap();
        m.paint(&BitMask::rect(8, 4, 0, 0, 3, 2).unwrap(), CAR, 1)
            .unwrap();
        m.paint(&BitMask::rect(8, 4, 5, 1, 3, 3).unwrap(), CAR, 2)
            .unwrap();
        m
    }

    #[test]
    fn one_car_one_thing_segment() {
        let table = ClassTable::kitti_step();
        let mut m = PanopticMap::filled(4, 4, VOID).unwrap();
        m.paint(&BitMask::rect(4, 4, 1, 1, 2, 2).unwrap(), CAR, 7)
            .unwrap();
        let segs = extract_segments(&m, &table);
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].class_id, segs[0].instance_id), (CAR, 7));
        assert_eq!(segs[0].mask.count(), 4);
    }

    #[test]
    fn all_ignore_has_no_segments() {
        let table = ClassTable::kitti_step();
        let m = PanopticMap::filled(4, 4, VOID).unwrap();
        assert!(extract_segments(&m, &table).is_empty());
    }

    #[test]
    fn segments_partition_frame() {
        let table = ClassTable::kitti_step();
        let m = two_cars_and_road();
        let segs = extract_segments(&m, &table);
        assert_eq!(segs.len(), 3);
        let mut union = BitMask::new(8, 4).unwrap();
        for (i, a) in segs.iter().enumerate() {
            for b in &segs[i + 1..] {
                assert_eq!(a.mask.intersection_count(&b.mask).unwrap(), 0);
            }
            union.union_with(&a.mask).unwrap();
        }
        assert_eq!(union.count(), 32);
    }

    #[test]
    fn validation_errors() {
        let table = ClassTable::kitti_step();
        let mut m = PanopticMap::filled(2, 2, ROAD).unwrap();
        m.set(0, 0, ROAD, 3);
        assert!(matches!(
            m.validate(&table),
            Err(Error::InstanceOnStuff { .. })
        ));
        m.set(0, 0, 77, 0);
        assert!(matches!(m.validate(&table), Err(Error::UnknownClass(77))));
        assert!(PanopticMap::new(2, 2, vec![0; 3], vec![0; 4]).is_err());
    }

    #[test]
    fn sequence_rejects_instance_reuse_across_classes() {
        let table = ClassTable::kitti_step();
        let mut a = PanopticMap::filled(2, 2, ROAD).unwrap();
        a.set(0, 0, CAR, 1);
        let mut b = PanopticMap::filled(2, 2, ROAD).unwrap();
        b.set(0, 0, 11, 1);
        assert!(matches!(
            Sequence::new(vec![a, b], table),
            Err(Error::InstanceClassConflict { .. })
        ));
    }

    #[test]
    fn sequence_tracks_and_masking() {
        let table = ClassTable::kitti_step();
        let f0 = two_cars_and_road();
        let mut f1 = PanopticMap::filled(8, 4, ROAD).unwrap();
        f1.paint(&BitMask::rect(8, 4, 1, 0, 3, 2).unwrap(), CAR, 1)
            .unwrap();
        let seq = Sequence::new(vec![f0, f1], table.clone()).unwrap();
        let tracks = seq.tracks();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].frames().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(tracks[1].frames().collect::<Vec<_>>(), vec![0]);

        let mut g0 = PanopticMap::filled(8, 4, ROAD).unwrap();
        g0.paint(&BitMask::rect(8, 4, 0, 0, 1, 4).unwrap(), VOID, 0)
            .unwrap();
        let g1 = PanopticMap::filled(8, 4, ROAD).unwrap();
        let gt = Sequence::new(vec![g0, g1], table).unwrap();
        let masked = seq.mask_ignored(&gt).unwrap();
        assert_eq!(masked.frames()[0].get(0, 0), (VOID, 0));
        assert_eq!(masked.frames()[0].get(1, 0), (CAR, 1));
        assert_eq!(masked.frames()[1], seq.frames()[1]);
    }
}
