//! Small randomized ground-truth/prediction pairs.

#![allow(dead_code)]

use panoptrack::sim::{drop_detections, generate_sequence, perturb_ids, perturb_masks, SimConfig};
use panoptrack::{BitMask, ClassTable, PanopticMap, Sequence};
use rand::Rng;

const PERSON: u16 = 11;
const CAR: u16 = 13;
const VOID: u16 = 255;

fn class_of(id: u32) -> u16 {
    if id % 2 == 1 {
        CAR
    } else {
        PERSON
    }
}

fn random_rect<R: Rng>(r: &mut R, w: u32, h: u32) -> BitMask {
    let bw = r.random_range(1..=w.min(12));
    let bh = r.random_range(1..=h.min(12));
    let x = r.random_range(0..=(w - bw)) as i64;
    let y = r.random_range(0..=(h - bh)) as i64;
    BitMask::rect(w, h, x, y, bw, bh).unwrap()
}

/// Random ground truth with up to 4 instances and a prediction derived from
/// it by per-object relabels, shifts, drops and spurious objects. Sizes up
/// to `max_side` x `max_side`, 1 to 5 frames, some void pixels.
pub fn random_pair<R: Rng>(r: &mut R, max_side: u32) -> (Sequence, Sequence) {
    let table = ClassTable::kitti_step();
    let w = r.random_range(4..=max_side);
    let h = r.random_range(4..=max_side);
    let n_frames = r.random_range(1..=5);
    let n_inst = r.random_range(0..=4u32);
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for _ in 0..n_frames {
        let bg = r.random_range(0..3u16);
        let mut g = PanopticMap::filled(w, h, bg).unwrap();
        let mut p = PanopticMap::filled(w, h, bg).unwrap();
        for id in 1..=n_inst {
            if r.random_bool(0.2) {
                continue;
            }
            let m = random_rect(r, w, h);
            g.paint(&m, class_of(id), id).unwrap();
            match r.random_range(0..6) {
                0 => {}
                1 => {
                    let other = r.random_range(1..=6u32);
                    p.paint(&m, class_of(other), other).unwrap();
                }
                2 => {
                    let s = m.translate(r.random_range(-2..=2), r.random_range(-2..=2));
                    p.paint(&s, class_of(id), id).unwrap();
                }
                _ => p.paint(&m, class_of(id), id).unwrap(),
            }
        }
        if r.random_bool(0.3) {
            let id = r.random_range(1..=6u32);
            p.paint(&random_rect(r, w, h), class_of(id), id).unwrap();
        }
        if r.random_bool(0.3) {
            g.paint(&random_rect(r, w, h), VOID, 0).unwrap();
        }
        gt.push(g);
        pred.push(p);
    }
    (
        Sequence::new(gt, table.clone()).unwrap(),
        Sequence::new(pred, table).unwrap(),
    )
}

/// Simulator sequence at most `side` x `side` with up to 4 objects in up to
/// 5 frames, and a prediction made by the library perturbations.
pub fn simulated_pair<R: Rng>(r: &mut R, side: u32) -> (Sequence, Sequence) {
    let cfg = SimConfig {
        width: r.random_range(16..=side),
        height: r.random_range(16..=side),
        frames: r.random_range(1..=5),
        min_objects: 1,
        max_objects: 4,
        min_size: 3,
        max_size: 10,
        occlusion_prob: r.random_range(0.0..0.3),
        persistence: r.random_range(0.5..=1.0),
        embedding_dim: 4,
        seed: r.random(),
        ..SimConfig::default()
    };
    let gt = generate_sequence(&cfg).unwrap().gt;
    let cuts: usize = gt.tracks().iter().map(|t| t.len().saturating_sub(1)).sum();
    let mut pred = perturb_ids(&gt, r.random_range(0..=cuts), r.random()).unwrap();
    if r.random_bool(0.5) {
        pred = perturb_masks(&pred, r.random_range(0..=2)).unwrap();
    }
    if r.random_bool(0.5) {
        pred = drop_detections(&pred, r.random_range(0.0..0.5), r.random()).unwrap();
    }
    (gt, pred)
}
