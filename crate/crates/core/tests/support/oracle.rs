//! Brute-force association metrics computed straight from per-pixel labels.
//!
//! Deliberately shares nothing with the library beyond reading raw label
//! arrays: tubes are hash sets of `(frame, pixel)`, matches are found by
//! scanning every pair.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use panoptrack::{ClassTable, Sequence};

type Tube = HashSet<(usize, usize)>;

struct Labels {
    frames: Vec<Vec<(u16, u32)>>,
}

impl Labels {
    fn of(seq: &Sequence) -> Labels {
        Labels {
            frames: seq
                .frames()
                .iter()
                .map(|f| {
                    f.classes()
                        .iter()
                        .copied()
                        .zip(f.instances().iter().copied())
                        .collect()
                })
                .collect(),
        }
    }
}

/// Tubes of thing instances, skipping pixels where `void` says so.
fn tubes(
    l: &Labels,
    table: &ClassTable,
    void: &dyn Fn(usize, usize) -> bool,
) -> BTreeMap<u32, Tube> {
    let mut out: BTreeMap<u32, Tube> = BTreeMap::new();
    for (t, frame) in l.frames.iter().enumerate() {
        for (k, &(c, i)) in frame.iter().enumerate() {
            if i == 0 || !table.is_thing(c) || void(t, k) {
                continue;
            }
            out.entry(i).or_default().insert((t, k));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrack {
    pub id: u32,
    pub as_score: f64,
    pub ids: u32,
    pub n_ids: u32,
    pub tq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub aq: f64,
    pub tq: f64,
    pub tracks: Vec<OracleTrack>,
}

/// AS, IDS and TQ per ground-truth track, plus their plain means. Pixels
/// that the ground truth labels void are removed from the prediction.
pub fn oracle(gt: &Sequence, pred: &Sequence) -> OracleResult {
    let table = gt.class_table();
    let g_labels = Labels::of(gt);
    let p_labels = Labels::of(pred);
    let ignore = table.ignore_id();
    let gvoid = |t: usize, k: usize| Some(g_labels.frames[t][k].0) == ignore;
    let g_tubes = tubes(&g_labels, table, &|_, _| false);
    let p_tubes = tubes(&p_labels, table, &gvoid);

    let mut tracks = Vec::new();
    for (&gid, g) in &g_tubes {
        // AS(g) = 1/|g| * sum over p with |p∩g| != 0 of TPA * IoU
        let mut as_sum = 0.0;
        for p in p_tubes.values() {
            let tpa = p.intersection(g).count();
            if tpa == 0 {
                continue;
            }
            let union = p.len() + g.len() - tpa;
            as_sum += tpa as f64 * (tpa as f64 / union as f64);
        }
        let as_score = as_sum / g.len() as f64;

        let frames: BTreeSet<usize> = g.iter().map(|&(t, _)| t).collect();
        let mut matched: Vec<Option<u32>> = Vec::new();
        for &t in &frames {
            let gm: HashSet<usize> = g.iter().filter(|x| x.0 == t).map(|x| x.1).collect();
            let mut hit = None;
            for (&pid, p) in &p_tubes {
                let pm: HashSet<usize> = p.iter().filter(|x| x.0 == t).map(|x| x.1).collect();
                let inter = pm.intersection(&gm).count();
                let union = pm.len() + gm.len() - inter;
                if union > 0 && inter as f64 / union as f64 > 0.5 {
                    hit = Some(pid);
                }
            }
            matched.push(hit);
        }
        let mut ids = 0;
        for w in matched.windows(2) {
            if w[0].is_none() || w[1].is_none() || w[0] != w[1] {
                ids += 1;
            }
        }
        let n_ids = frames.len() as u32 - 1;
        let rate = if n_ids == 0 {
            0.0
        } else {
            ids as f64 / n_ids as f64
        };
        let tq = ((1.0 - rate) * as_score).sqrt();
        tracks.push(OracleTrack {
            id: gid,
            as_score,
            ids,
            n_ids,
            tq,
        });
    }
    if tracks.is_empty() {
        return OracleResult {
            aq: 1.0,
            tq: 1.0,
            tracks,
        };
    }
    let n = tracks.len() as f64;
    OracleResult {
        aq: tracks.iter().map(|t| t.as_score).sum::<f64>() / n,
        tq: tracks.iter().map(|t| t.tq).sum::<f64>() / n,
        tracks,
    }
}
