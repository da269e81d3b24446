//! Deterministic synthetic panoptic sequences.
//!
//! Objects are rectangles or ellipses moving at integer velocity and
//! bouncing off the frame border, painted over horizontal stuff bands in
//! index order (later objects occlude earlier ones). Every random draw comes
//! from a ChaCha8 generator seeded with `SimConfig::seed`, one stream per
//! purpose, so the output is a pure function of the configuration.

mod perturb;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classes::{ClassId, ClassTable};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::mask::BitMask;
use crate::panoptic::{InstanceId, PanopticMap, Sequence};
use crate::track::Track;
use crate::tracker::Detection;

pub use perturb::{drop_detections, perturb_ids, perturb_masks};

/// `(dx, dy)` per `(instance, frame)`.
pub type Offsets = BTreeMap<(InstanceId, usize), (i64, i64)>;

/// Identifier of the random generator and stream layout. Recorded in every
/// simulator manifest.
pub const RNG_ALGORITHM: &str = "chacha8-stream";

const STREAM_LAYOUT: u64 = 0;
const STREAM_OBJECTS: u64 = 1;
const STREAM_OCCLUSION: u64 = 2;
const STREAM_EMBEDDINGS: u64 = 3;
pub(crate) const STREAM_NOISE: u64 = 4;
pub(crate) const STREAM_IDS: u64 = 5;
pub(crate) const STREAM_DROP: u64 = 6;

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Rect,
    Ellipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassPreset {
    #[default]
    KittiStep,
    MotchallengeStep,
}

impl ClassPreset {
    pub fn table(self) -> ClassTable {
        match self {
            ClassPreset::KittiStep => ClassTable::kitti_step(),
            ClassPreset::MotchallengeStep => ClassTable::motchallenge_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub shapes: Vec<ShapeKind>,
    /// Object side lengths are drawn from `min_size..=max_size`.
    pub min_size: u32,
    pub max_size: u32,
    /// Per-axis speed bounds in pixels per frame.
    pub min_speed: u32,
    pub max_speed: u32,
    /// Number of horizontal stuff bands.
    pub stuff_bands: usize,
    /// Probability that an object is hidden in a given frame after the first.
    pub occlusion_prob: f64,
    /// Probability that an object is present in every frame; otherwise it
    /// lives over a random sub-interval.
    pub persistence: f64,
    /// When false, objects keep a gap of more than `max_speed` pixels from
    /// each other in every frame.
    pub allow_overlap: bool,
    pub embedding_dim: usize,
    /// Upper bound on the cosine similarity between base embeddings of
    /// distinct objects.
    pub max_embedding_cosine: f64,
    pub classes: ClassPreset,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            width: 128,
            height: 64,
            frames: 10,
            min_objects: 1,
            max_objects: 6,
            shapes: vec![ShapeKind::Rect, ShapeKind::Ellipse],
            min_size: 8,
            max_size: 20,
            min_speed: 0,
            max_speed: 3,
            stuff_bands: 3,
            occlusion_prob: 0.0,
            persistence: 1.0,
            allow_overlap: true,
            embedding_dim: 128,
            max_embedding_cosine: 0.4,
            classes: ClassPreset::KittiStep,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidValue(m));
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return bad("width, height and frames must be positive".into());
        }
        if self.shapes.is_empty() {
            return bad("at least one shape kind is required".into());
        }
        if self.min_size == 0 || self.min_size > self.max_size {
            return bad(format!("size range {}..={}", self.min_size, self.max_size));
        }
        if self.min_speed > self.max_speed {
            return bad(format!(
                "speed range {}..={}",
                self.min_speed, self.max_speed
            ));
        }
        if self.min_objects > self.max_objects {
            return bad(format!(
                "object count range {}..={}",
                self.min_objects, self.max_objects
            ));
        }
        for (name, p) in [
            ("occlusion_prob", self.occlusion_prob),
            ("persistence", self.persistence),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.stuff_bands == 0 {
            return bad("stuff_bands must be at least 1".into());
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be at least 1".into());
        }
        if !(-1.0..=1.0).contains(&self.max_embedding_cosine) {
            return bad(format!(
                "max_embedding_cosine {}",
                self.max_embedding_cosine
            ));
        }
        if self.max_size > self.width || self.max_size > self.height {
            return Err(Error::Infeasible(format!(
                "objects up to {} px do not fit a {}x{} frame",
                self.max_size, self.width, self.height
            )));
        }
        let table = self.classes.table();
        if !table.has_things() || table.stuff_ids().next().is_none() {
            return Err(Error::Infeasible(
                "class table needs thing and stuff classes".into(),
            ));
        }
        Ok(())
    }
}

/// Geometry of one simulated object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub instance_id: InstanceId,
    pub class_id: ClassId,
    pub shape: ShapeKind,
    pub size: (u32, u32),
    pub first_frame: usize,
    /// Top-left corner per frame of the lifespan, starting at `first_frame`.
    pub positions: Vec<(i64, i64)>,
    /// Frames of the lifespan in which the object is not drawn.
    pub hidden: Vec<usize>,
}

impl SimObject {
    pub fn last_frame(&self) -> usize {
        self.first_frame + self.positions.len() - 1
    }

    pub fn position(&self, frame: usize) -> Option<(i64, i64)> {
        frame
            .checked_sub(self.first_frame)
            .and_then(|i| self.positions.get(i).copied())
    }

    pub fn is_visible(&self, frame: usize) -> bool {
        self.position(frame).is_some() && !self.hidden.contains(&frame)
    }

    /// Unoccluded shape at `frame`, or `None` outside the lifespan.
    pub fn full_mask(&self, width: u32, height: u32, frame: usize) -> Option<BitMask> {
        let (x0, y0) = self.position(frame)?;
        let (w, h) = self.size;
        Some(match self.shape {
            ShapeKind::Rect => BitMask::rect(width, height, x0, y0, w, h).expect("valid dims"),
            ShapeKind::Ellipse => {
                let (rx, ry) = (w as f64 / 2.0, h as f64 / 2.0);
                BitMask::from_fn(width, height, |x, y| {
                    let (dx, dy) = (x as i64 - x0, y as i64 - y0);
                    if dx < 0 || dy < 0 || dx >= w as i64 || dy >= h as i64 {
                        return false;
                    }
                    let u = (dx as f64 + 0.5 - rx) / rx;
                    let v = (dy as f64 + 0.5 - ry) / ry;
                    u * u + v * v <= 1.0
                })
                .expect("valid dims")
            }
        })
    }

    fn bbox(&self, frame: usize) -> Option<(i64, i64, i64, i64)> {
        let (x, y) = self.position(frame)?;
        Some((x, y, x + self.size.0 as i64, y + self.size.1 as i64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub config: SimConfig,
    pub gt: Sequence,
    pub gt_tracks: Vec<Track>,
    pub objects: Vec<SimObject>,
    /// `(dx, dy)` of each instance between frame `t - 1` and frame `t`, for
    /// every `t` at which the instance is visible in both frames.
    pub offsets: Offsets,
    /// Unit-length base embedding per instance.
    pub embeddings: BTreeMap<InstanceId, Embedding>,
}

/// Generates one sequence from `cfg`.
pub fn generate_sequence(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let table = cfg.classes.table();
    let (w, h) = (cfg.width, cfg.height);

    let background = stuff_bands(cfg, &table);
    let objects = place_objects(cfg, &table)?;

    let mut frames = Vec::with_capacity(cfg.frames);
    for t in 0..cfg.frames {
        let mut map = background.clone();
        for o in &objects {
            if o.is_visible(t) {
                let m = o.full_mask(w, h, t).expect("inside lifespan");
                map.paint(&m, o.class_id, o.instance_id)?;
            }
        }
        frames.push(map);
    }
    let gt = Sequence::new(frames, table)?;
    let gt_tracks = gt.tracks();

    let mut offsets = BTreeMap::new();
    for o in &objects {
        for t in (o.first_frame + 1)..=o.last_frame() {
            if o.is_visible(t) && o.is_visible(t - 1) {
                let (a, b) = (o.position(t - 1).unwrap(), o.position(t).unwrap());
                offsets.insert((o.instance_id, t), (b.0 - a.0, b.1 - a.1));
            }
        }
    }
    let embeddings = base_embeddings(cfg, objects.len())?
        .into_iter()
        .zip(&objects)
        .map(|(e, o)| (o.instance_id, e))
        .collect();

    Ok(SimOutput {
        config: cfg.clone(),
        gt,
        gt_tracks,
        objects,
        offsets,
        embeddings,
    })
}

fn stuff_bands(cfg: &SimConfig, table: &ClassTable) -> PanopticMap {
    let mut r = rng(cfg.seed, STREAM_LAYOUT);
    let stuff: Vec<ClassId> = table.stuff_ids().collect();
    let bands = cfg.stuff_bands.min(cfg.height as usize);
    let mut cuts: Vec<u32> = Vec::new();
    while cuts.len() + 1 < bands {
        let c = r.random_range(1..cfg.height);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    cuts.push(cfg.height);
    let mut map = PanopticMap::filled(cfg.width, cfg.height, stuff[0]).expect("valid dims");
    let mut y0 = 0;
    for &y1 in &cuts {
        let class = stuff[r.random_range(0..stuff.len())];
        for y in y0..y1 {
            for x in 0..cfg.width {
                map.set(x, y, class, 0);
            }
        }
        y0 = y1;
    }
    map
}

fn random_velocity(r: &mut ChaCha8Rng, cfg: &SimConfig, room: u32) -> i64 {
    let max = cfg.max_speed.min(room) as i64;
    let min = (cfg.min_speed as i64).min(max);
    let speed = r.random_range(min..=max);
    if speed != 0 && r.random_bool(0.5) {
        -speed
    } else {
        speed
    }
}

/// Moves `pos` by `v` inside `[0, room]`, reflecting at the ends.
fn bounce(pos: i64, v: i64, room: i64) -> (i64, i64) {
    let mut p = pos + v;
    let mut v = v;
    if p < 0 {
        p = -p;
        v = -v;
    } else if p > room {
        p = 2 * room - p;
        v = -v;
    }
    (p.clamp(0, room), v)
}

fn sample_object(
    r: &mut ChaCha8Rng,
    cfg: &SimConfig,
    things: &[ClassId],
    id: InstanceId,
) -> SimObject {
    let class_id = things[r.random_range(0..things.len())];
    let shape = cfg.shapes[r.random_range(0..cfg.shapes.len())];
    let size = (
        r.random_range(cfg.min_size..=cfg.max_size),
        r.random_range(cfg.min_size..=cfg.max_size),
    );
    let (first_frame, len) = if r.random_bool(cfg.persistence) {
        (0, cfg.frames)
    } else {
        let start = r.random_range(0..cfg.frames);
        (start, r.random_range(1..=cfg.frames - start))
    };
    let room_x = cfg.width - size.0;
    let room_y = cfg.height - size.1;
    let mut x = r.random_range(0..=room_x) as i64;
    let mut y = r.random_range(0..=room_y) as i64;
    let mut vx = random_velocity(r, cfg, room_x);
    let mut vy = random_velocity(r, cfg, room_y);
    let mut positions = vec![(x, y)];
    for _ in 1..len {
        (x, vx) = bounce(x, vx, room_x as i64);
        (y, vy) = bounce(y, vy, room_y as i64);
        positions.push((x, y));
    }
    SimObject {
        instance_id: id,
        class_id,
        shape,
        size,
        first_frame,
        positions,
        hidden: Vec::new(),
    }
}

fn too_close(a: &SimObject, b: &SimObject, margin: i64) -> bool {
    let lo = a.first_frame.max(b.first_frame);
    let hi = a.last_frame().min(b.last_frame());
    (lo..=hi).any(|t| {
        let (ax0, ay0, ax1, ay1) = a.bbox(t).unwrap();
        let (bx0, by0, bx1, by1) = b.bbox(t).unwrap();
        ax0 - margin < bx1 && bx0 < ax1 + margin && ay0 - margin < by1 && by0 < ay1 + margin
    })
}

const PLACEMENT_ATTEMPTS: usize = 500;

fn place_objects(cfg: &SimConfig, table: &ClassTable) -> Result<Vec<SimObject>> {
    let mut r = rng(cfg.seed, STREAM_OBJECTS);
    let things: Vec<ClassId> = table.thing_ids().collect();
    let count = r.random_range(cfg.min_objects..=cfg.max_objects);
    let margin = cfg.max_speed as i64 + 1;
    let mut objects: Vec<SimObject> = Vec::with_capacity(count);
    for i in 0..count {
        let id = i as InstanceId + 1;
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let o = sample_object(&mut r, cfg, &things, id);
            if cfg.allow_overlap || objects.iter().all(|p| !too_close(p, &o, margin)) {
                placed = Some(o);
                break;
            }
        }
        match placed {
            Some(o) => objects.push(o),
            None if objects.len() >= cfg.min_objects => break,
            None => {
                return Err(Error::Infeasible(format!(
                    "could not place {} separated objects",
                    cfg.min_objects
                )))
            }
        }
    }

    let mut r = rng(cfg.seed, STREAM_OCCLUSION);
    for o in &mut objects {
        for t in o.first_frame.max(1)..=o.last_frame() {
            if r.random_bool(cfg.occlusion_prob) {
                o.hidden.push(t);
            }
        }
    }
    Ok(objects)
}

fn base_embeddings(cfg: &SimConfig, n: usize) -> Result<Vec<Embedding>> {
    let mut r = rng(cfg.seed, STREAM_EMBEDDINGS);
    let mut out: Vec<Embedding> = Vec::with_capacity(n);
    while out.len() < n {
        let mut accepted = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let v: Vec<f64> = (0..cfg.embedding_dim)
                .map(|_| r.sample(StandardNormal))
                .collect();
            let Ok(e) = Embedding::new(v).and_then(|e| e.normalized()) else {
                continue;
            };
            let separated = out
                .iter()
                .all(|o| o.dot(&e).expect("equal lengths") <= cfg.max_embedding_cosine);
            if separated {
                accepted = Some(e);
                break;
            }
        }
        out.push(accepted.ok_or_else(|| {
            Error::Infeasible(format!(
                "cannot draw {n} embeddings of dimension {} with cosine <= {}",
                cfg.embedding_dim, cfg.max_embedding_cosine
            ))
        })?);
    }
    Ok(out)
}

/// Per-frame embedding of every visible instance: the unit-normalized base
/// plus isotropic Gaussian noise of scale `noise_sigma`. With zero noise the
/// base is returned unchanged.
pub fn synth_embeddings(
    out: &SimOutput,
    noise_sigma: f64,
    seed: u64,
) -> Result<BTreeMap<(InstanceId, usize), Embedding>> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidValue(format!("noise_sigma {noise_sigma}")));
    }
    let mut r = rng(seed, STREAM_NOISE);
    let mut res = BTreeMap::new();
    for track in &out.gt_tracks {
        let base = out
            .embeddings
            .get(&track.track_id())
            .ok_or_else(|| Error::InvalidTrack(format!("no embedding for {}", track.track_id())))?;
        for t in track.frames() {
            let e = if noise_sigma == 0.0 {
                base.clone()
            } else {
                let v: Vec<f64> = base
                    .values()
                    .iter()
                    .map(|b| b + noise_sigma * r.sample::<f64, _>(StandardNormal))
                    .collect();
                Embedding::new(v)?.normalized()?
            };
            res.insert((track.track_id(), t), e);
        }
    }
    Ok(res)
}

/// Detections equal to the ground-truth segments of `gt`, one per visible
/// instance in instance-id order, with score 1. `offsets` and `embeddings`
/// are looked up by `(instance, frame)`; a missing embedding is an error.
pub fn detections_from_gt(
    gt: &Sequence,
    embeddings: &BTreeMap<(InstanceId, usize), Embedding>,
    offsets: Option<&Offsets>,
) -> Result<Vec<Vec<Detection>>> {
    let mut frames = vec![Vec::new(); gt.len()];
    for track in gt.tracks() {
        let id = track.track_id();
        for (&t, mask) in track.masks() {
            let e = embeddings.get(&(id, t)).ok_or_else(|| {
                Error::InvalidTrack(format!("no embedding for instance {id} at frame {t}"))
            })?;
            let mut d = Detection::new(mask.clone(), track.class_id(), 1.0, e.clone())?;
            d.offset = offsets.and_then(|o| o.get(&(id, t)).copied());
            frames[t].push((id, d));
        }
    }
    Ok(frames
        .into_iter()
        .map(|mut f| {
            f.sort_by_key(|(id, _)| *id);
            f.into_iter().map(|(_, d)| d).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::cosine_similarity;

    fn cfg(seed: u64) -> SimConfig {
        SimConfig {
            seed,
            embedding_dim: 16,
            ..SimConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_sequence(&cfg(9)).unwrap();
        let b = generate_sequence(&cfg(9)).unwrap();
        assert_eq!(a, b);
        let c = generate_sequence(&cfg(10)).unwrap();
        assert_ne!(a.gt, c.gt);
    }

    #[test]
    fn single_frame_single_object() {
        let c = SimConfig {
            frames: 1,
            min_objects: 1,
            max_objects: 1,
            ..cfg(3)
        };
        let out = generate_sequence(&c).unwrap();
        assert_eq!(out.gt.len(), 1);
        assert_eq!(out.gt_tracks.len(), 1);
        assert_eq!(out.gt_tracks[0].len(), 1);
        assert!(out.offsets.is_empty());
    }

    #[test]
    fn constant_velocity_gives_translations() {
        let c = SimConfig {
            frames: 3,
            min_objects: 1,
            max_objects: 1,
            width: 120,
            height: 40,
            min_size: 8,
            max_size: 8,
            min_speed: 1,
            max_speed: 1,
            shapes: vec![ShapeKind::Rect],
            ..cfg(5)
        };
        let out = generate_sequence(&c).unwrap();
        let track = &out.gt_tracks[0];
        for t in 1..3 {
            let (dx, dy) = out.offsets[&(track.track_id(), t)];
            assert_eq!((dx.abs(), dy.abs()), (1, 1));
            assert_eq!(
                &track.get(t - 1).unwrap().translate(dx, dy),
                track.get(t).unwrap()
            );
        }
    }

    #[test]
    fn offsets_match_unoccluded_shapes() {
        for seed in 0..20 {
            let out = generate_sequence(&SimConfig {
                max_speed: 6,
                occlusion_prob: 0.2,
                persistence: 0.5,
                ..cfg(seed)
            })
            .unwrap();
            for (&(id, t), &(dx, dy)) in &out.offsets {
                let o = &out.objects[id as usize - 1];
                let prev = o.full_mask(128, 64, t - 1).unwrap();
                assert_eq!(prev.translate(dx, dy), o.full_mask(128, 64, t).unwrap());
            }
        }
    }

    #[test]
    fn separated_objects_never_touch() {
        for seed in 0..20 {
            let out = generate_sequence(&SimConfig {
                allow_overlap: false,
                ..cfg(seed)
            })
            .unwrap();
            for t in 0..out.gt.len() {
                let total: u64 = out
                    .objects
                    .iter()
                    .filter_map(|o| o.full_mask(128, 64, t))
                    .map(|m| m.count())
                    .sum();
                let visible: u64 = out
                    .gt_tracks
                    .iter()
                    .filter_map(|g| g.get(t))
                    .map(|m| m.count())
                    .sum();
                assert_eq!(total, visible);
            }
        }
    }

    #[test]
    fn infeasible_sizes_rejected() {
        let c = SimConfig {
            max_size: 100,
            ..cfg(0)
        };
        assert!(matches!(generate_sequence(&c), Err(Error::Infeasible(_))));
    }

    #[test]
    fn embeddings_are_separated_and_noise_free_at_zero() {
        let out = generate_sequence(&cfg(4)).unwrap();
        let e: Vec<_> = out.embeddings.values().collect();
        for i in 0..e.len() {
            assert!((e[i].norm() - 1.0).abs() < 1e-12);
            for j in 0..i {
                assert!(cosine_similarity(e[i], e[j]).unwrap() <= 0.4);
            }
        }
        let per_frame = synth_embeddings(&out, 0.0, 1).unwrap();
        for ((id, _), v) in &per_frame {
            assert_eq!(v, &out.embeddings[id]);
        }
        let noisy = synth_embeddings(&out, 0.1, 1).unwrap();
        assert_eq!(noisy, synth_embeddings(&out, 0.1, 1).unwrap());
        assert_ne!(noisy, per_frame);
        assert!(noisy.values().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn detections_mirror_segments() {
        let out = generate_sequence(&cfg(2)).unwrap();
        let emb = synth_embeddings(&out, 0.0, 0).unwrap();
        let dets = detections_from_gt(&out.gt, &emb, Some(&out.offsets)).unwrap();
        let n: usize = dets.iter().map(Vec::len).sum();
        let expected: usize = out.gt_tracks.iter().map(Track::len).sum();
        assert_eq!(n, expected);
        assert!(dets[0].iter().all(|d| d.offset.is_none()));
    }
}
