mod support;

use panoptrack::metrics::{
    compute_pat, compute_pq, compute_sq, compute_stq, evaluate_sequence, semantic_bootstrap_loss,
    EvalConfig, ProbMap,
};
use panoptrack::sim::{generate_sequence, perturb_ids, SimConfig};
use panoptrack::{extract_segments, BitMask, ClassTable, PanopticMap, Sequence, Track};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_sim(seed: u64) -> SimConfig {
    SimConfig {
        width: 48,
        height: 32,
        frames: 5,
        max_objects: 4,
        min_size: 4,
        max_size: 12,
        embedding_dim: 4,
        occlusion_prob: 0.1,
        persistence: 0.7,
        seed,
        ..SimConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn perfect_prediction_scores_one(seed in any::<u64>()) {
        let gt = generate_sequence(&small_sim(seed)).unwrap().gt;
        let h = evaluate_sequence(&gt, &gt, EvalConfig::default()).unwrap().headline();
        for v in [h.pq, h.sq, h.aq, h.stq, h.tq, h.pat] {
            prop_assert!((v - 1.0).abs() < 1e-9, "{h:?}");
        }
    }

    #[test]
    fn id_switches_only_lower_association(seed in any::<u64>(), cut_seed in any::<u64>()) {
        let gt = generate_sequence(&SimConfig { persistence: 1.0, occlusion_prob: 0.0, ..small_sim(seed) }).unwrap().gt;
        let cuts: usize = gt.tracks().iter().map(|t| t.len() - 1).sum();
        let base = evaluate_sequence(&gt, &gt, EvalConfig::default()).unwrap();
        let mut prev = base.clone();
        for k in 1..=cuts.min(5) {
            let pred = perturb_ids(&gt, k, cut_seed).unwrap();
            let r = evaluate_sequence(&gt, &pred, EvalConfig::default()).unwrap();
            prop_assert_eq!(r.pq.pq.to_bits(), base.pq.pq.to_bits());
            prop_assert_eq!(r.semantic.mean.to_bits(), base.semantic.mean.to_bits());
            prop_assert!(r.tq <= prev.tq && r.aq <= prev.aq);
            if k == 1 {
                prop_assert!(r.tq < base.tq && r.aq < base.aq);
            }
            prev = r;
        }
    }

    #[test]
    fn report_is_internally_consistent(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (gt, pred) = support::fixtures::random_pair(&mut r, 24);
        let rep = evaluate_sequence(&gt, &pred, EvalConfig::default()).unwrap();
        let h = rep.headline();
        prop_assert_eq!(h.stq, (h.aq * h.sq).sqrt());
        let pat = if h.pq + h.tq == 0.0 { 0.0 } else { 2.0 * h.pq * h.tq / (h.pq + h.tq) };
        prop_assert_eq!(h.pat, pat);
        prop_assert_eq!(h.pq, compute_pq(&gt, &pred).unwrap().pq);
        prop_assert_eq!(h.sq, compute_sq(&gt, &pred).unwrap().mean);
    }

    #[test]
    fn combiners_symmetric_and_idempotent(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        prop_assert_eq!(compute_pat(x, y).unwrap(), compute_pat(y, x).unwrap());
        prop_assert_eq!(compute_stq(x, y).unwrap(), compute_stq(y, x).unwrap());
        prop_assert!((compute_pat(x, x).unwrap() - x).abs() <= 1e-15);
        prop_assert!((compute_stq(x, x).unwrap() - x).abs() <= 1e-15);
    }

    #[test]
    fn segments_partition_non_void_pixels(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (gt, _) = support::fixtures::random_pair(&mut r, 20);
        let table = gt.class_table();
        for f in gt.frames() {
            let segs = extract_segments(f, table);
            let (w, h) = f.dims();
            let mut cover = vec![0u8; (w * h) as usize];
            for s in &segs {
                for (x, y) in s.mask.iter_ones() {
                    cover[(y * w + x) as usize] += 1;
                }
            }
            for (k, &c) in f.classes().iter().enumerate() {
                prop_assert_eq!(cover[k], u8::from(!table.is_ignore(c)));
            }
        }
    }

    #[test]
    fn bootstrap_loss_ignores_pixel_order(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (gt, _) = support::fixtures::random_pair(&mut r, 12);
        let table = gt.class_table();
        let f = &gt.frames()[0];
        let (w, h) = f.dims();
        let n = table.len();
        let probs: Vec<f64> = (0..w * h).flat_map(|k| {
            let raw: Vec<f64> = (0..n).map(|c| 1.0 + ((k as usize * 7 + c * 13 + seed as usize % 5) % 11) as f64).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(move |v| v / s)
        }).collect();
        let a = semantic_bootstrap_loss(&ProbMap::new(w, h, table, probs.clone()).unwrap(), f, table).unwrap();
        // Reverse the pixel order of both the labels and the probabilities.
        let rev_classes: Vec<u16> = f.classes().iter().rev().copied().collect();
        let rev_inst: Vec<u32> = f.instances().iter().rev().copied().collect();
        let rev_map = PanopticMap::new(w, h, rev_classes, rev_inst).unwrap();
        let rev_probs: Vec<f64> = probs.chunks(n).rev().flatten().copied().collect();
        let b = semantic_bootstrap_loss(&ProbMap::new(w, h, table, rev_probs).unwrap(), &rev_map, table).unwrap();
        prop_assert_eq!(a, b);
        let exact = semantic_bootstrap_loss(&ProbMap::from_labels(f, table, 1.0).unwrap(), f, table).unwrap();
        prop_assert!(exact.abs() < 1e-9);
        prop_assert!(a > 0.0);
    }

    #[test]
    fn tube_iou_drops_when_one_sided_frame_added(x in 0i64..10, w in 1u32..8, extra in 1u32..6) {
        let mut a = Track::new(1, 13);
        a.insert(0, BitMask::rect(16, 8, x, 1, w, 4).unwrap()).unwrap();
        let mut b = a.clone();
        prop_assert_eq!(panoptrack::tube_iou(&a, &b).unwrap(), 1.0);
        b.insert(1, BitMask::rect(16, 8, 0, 0, extra, 2).unwrap()).unwrap();
        prop_assert!(panoptrack::tube_iou(&a, &b).unwrap() < 1.0);
    }
}

#[test]
fn perfect_prediction_on_every_preset() {
    for classes in [
        panoptrack::sim::ClassPreset::KittiStep,
        panoptrack::sim::ClassPreset::MotchallengeStep,
    ] {
        let gt = generate_sequence(&SimConfig {
            classes,
            ..small_sim(4)
        })
        .unwrap()
        .gt;
        let r = evaluate_sequence(&gt, &gt, EvalConfig::default()).unwrap();
        assert_eq!(r.headline().pat, 1.0);
    }
}

#[test]
fn void_only_ground_truth_is_vacuous() {
    let t = ClassTable::kitti_step();
    let gt = Sequence::new(vec![PanopticMap::filled(4, 4, 255).unwrap()], t.clone()).unwrap();
    let pred = Sequence::new(vec![PanopticMap::filled(4, 4, 0).unwrap()], t).unwrap();
    let r = evaluate_sequence(&gt, &pred, EvalConfig::default()).unwrap();
    assert!(r.vacuous_tracking);
    assert_eq!((r.aq, r.tq), (1.0, 1.0));
}
