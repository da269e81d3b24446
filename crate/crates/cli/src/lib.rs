//! Command implementations behind the `panoptrack` binary.
//!
//! Each `cmd_*` function is a plain library call so that tests can drive the
//! tool without spawning a process.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use panoptrack::io::{
    list_sequences, read_class_table, read_detections, read_sequence_dir, write_class_table,
    write_detections, write_json, write_report, write_sequence_dir, DetectionsFile,
    CLASS_TABLE_FILE,
};
use panoptrack::metrics::{aggregate_reports, evaluate_sequence, MetricReport};
use panoptrack::sim::{detections_from_gt, generate_sequence, synth_embeddings, RNG_ALGORITHM};
use panoptrack::tracker::{SemanticLogits, StepReport, TrackerState};
use panoptrack::{ClassTable, Embedding, PanopticMap, Sequence, TOOL_VERSION};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{CliConfig, SimulateOptions};

/// Exit code for bad input: unreadable files, schema or format violations,
/// invalid configuration.
pub const EXIT_INPUT: i32 = 1;
/// Exit code for internal failures.
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] panoptrack::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Internal(_) => "internal",
        }
    }

    /// Machine-readable form printed with `--json`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn thread_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Input(panoptrack::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

/// Class table from the config, else `classes.json` in `fallback_dir`.
fn class_table(cfg: &CliConfig, fallback_dir: &Path) -> CliResult<ClassTable> {
    let path = match &cfg.class_table {
        Some(p) => p.clone(),
        None => fallback_dir.join(CLASS_TABLE_FILE),
    };
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "class table {} not found; set class_table in the config",
            path.display()
        )));
    }
    Ok(read_class_table(&path)?)
}

fn config_json(cfg: &CliConfig) -> CliResult<serde_json::Value> {
    serde_json::to_value(cfg).map_err(|e| CliError::Internal(e.to_string()))
}

/// Every headline metric must be a number in [0, 1].
fn check_report(scope: &str, r: &MetricReport) -> CliResult<()> {
    let h = r.headline();
    for (name, v) in [
        ("PQ", h.pq),
        ("SQ", h.sq),
        ("AQ", h.aq),
        ("STQ", h.stq),
        ("TQ", h.tq),
        ("PAT", h.pat),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Internal(format!(
                "{scope}: {name} = {v} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Result of [`cmd_eval`].
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub sequences: Vec<(String, MetricReport)>,
    pub aggregate: MetricReport,
}

/// Evaluates every sequence of the dataset root `gt_root` against the
/// same-named sequence under `pred_root`. With `out`, writes `<seq>.json`
/// per sequence and `aggregate.json`.
pub fn cmd_eval(
    gt_root: &Path,
    pred_root: &Path,
    cfg: &CliConfig,
    out: Option<&Path>,
) -> CliResult<EvalOutcome> {
    let table = class_table(cfg, gt_root)?;
    let names = list_sequences(gt_root)?;
    if names.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no sequence directories",
            gt_root.display()
        )));
    }
    let pred_names = list_sequences(pred_root)?;
    for n in &names {
        if !pred_names.contains(n) {
            return Err(CliError::Usage(format!(
                "prediction for sequence {n} is missing under {}",
                pred_root.display()
            )));
        }
    }
    for n in &pred_names {
        if !names.contains(n) {
            return Err(CliError::Usage(format!(
                "prediction sequence {n} has no ground truth under {}",
                gt_root.display()
            )));
        }
    }

    let pool = thread_pool(cfg.jobs)?;
    let sequences: Vec<(String, MetricReport)> = pool.install(|| {
        names
            .par_iter()
            .map(|n| {
                let gt = read_sequence_dir(&gt_root.join(n), &table)?;
                let pred = read_sequence_dir(&pred_root.join(n), &table)?;
                let r = evaluate_sequence(&gt, &pred, cfg.eval)?;
                check_report(n, &r)?;
                Ok((n.clone(), r))
            })
            .collect::<CliResult<_>>()
    })?;
    let reports: Vec<MetricReport> = sequences.iter().map(|(_, r)| r.clone()).collect();
    let aggregate = aggregate_reports(&reports)?;
    check_report("dataset", &aggregate)?;

    if let Some(out) = out {
        create_dir(out)?;
        let c = config_json(cfg)?;
        for (n, r) in &sequences {
            write_report(r, n, c.clone(), &out.join(format!("{n}.json")))?;
        }
        write_report(&aggregate, "dataset", c, &out.join("aggregate.json"))?;
    }
    Ok(EvalOutcome {
        sequences,
        aggregate,
    })
}

/// Per-frame tracker statistics of [`cmd_track`].
#[derive(Debug, Clone, Serialize)]
pub struct TrackOutcome {
    pub frames: Vec<StepReport>,
    pub tracks: usize,
}

/// Runs the tracker over one sequence. Semantic evidence is the class
/// channel of the panoptic frames in `semantic_dir`; the class table comes
/// from the config or from `classes.json` in the parent of `semantic_dir`.
/// Writes one panoptic PNG per frame into `out_dir`.
pub fn cmd_track(
    detections: &Path,
    semantic_dir: &Path,
    cfg: &CliConfig,
    out_dir: &Path,
) -> CliResult<TrackOutcome> {
    let parent = semantic_dir.parent().unwrap_or(Path::new("."));
    let table = class_table(cfg, parent)?;
    let dets = read_detections(detections)?;
    let semantic = read_sequence_dir(semantic_dir, &table)?;
    if semantic.dims() != (dets.width, dets.height) {
        return Err(CliError::Input(panoptrack::Error::DimensionMismatch {
            expected: semantic.dims(),
            found: (dets.width, dets.height),
        }));
    }
    if let Some(last) = dets.frames.last() {
        if last.frame >= semantic.len() {
            return Err(CliError::Usage(format!(
                "{}: detections reference frame {}, semantic sequence has {} frames",
                detections.display(),
                last.frame,
                semantic.len()
            )));
        }
    }
    if dets.embedding_dim != cfg.tracker.embedding_dim {
        return Err(CliError::Config(format!(
            "tracker.embedding_dim is {}, detections file has {}",
            cfg.tracker.embedding_dim, dets.embedding_dim
        )));
    }

    let mut state = TrackerState::new(cfg.tracker, table.clone())?;
    let mut maps: Vec<PanopticMap> = Vec::with_capacity(semantic.len());
    let mut frames = Vec::with_capacity(semantic.len());
    for (t, sem) in semantic.frames().iter().enumerate() {
        let logits = SemanticLogits::from_class_map(sem, &table)?;
        let step = state.step(t, &dets.detections_at(t)?, &logits)?;
        maps.push(step.map);
        frames.push(step.report);
    }
    let seq = Sequence::new(maps, table)?;
    write_sequence_dir(&seq, out_dir)?;
    Ok(TrackOutcome {
        frames,
        tracks: (state.next_id() - 1) as usize,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestSequence {
    pub name: String,
    pub seed: u64,
    pub frames: usize,
    pub objects: usize,
    pub gt_dir: PathBuf,
    pub detections: PathBuf,
}

/// Contents of `manifest.json` written by [`cmd_simulate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub rng_algorithm: String,
    pub seed: u64,
    pub sequences: Vec<ManifestSequence>,
    pub config: serde_json::Value,
}

pub fn sequence_name(index: usize) -> String {
    format!("{index:04}")
}

/// Generates `simulate.sequences` sequences. Layout under `out`:
/// `gt/classes.json`, `gt/<seq>/NNNNNN.png`, `detections/<seq>.json` and
/// `manifest.json`. Paths in the manifest are relative to `out`.
pub fn cmd_simulate(cfg: &CliConfig, out: &Path) -> CliResult<Manifest> {
    cfg.validate()?;
    let opts = &cfg.simulate;
    let gt_root = out.join("gt");
    let det_root = out.join("detections");
    create_dir(&gt_root)?;
    create_dir(&det_root)?;
    write_class_table(&cfg.sim.classes.table(), &gt_root.join(CLASS_TABLE_FILE))?;

    let pool = thread_pool(cfg.jobs)?;
    let sequences: Vec<ManifestSequence> = pool.install(|| {
        (0..opts.sequences)
            .into_par_iter()
            .map(|i| {
                let name = sequence_name(i);
                let seed = cfg.sim.seed.wrapping_add(i as u64);
                let sim = generate_sequence(&panoptrack::sim::SimConfig {
                    seed,
                    ..cfg.sim.clone()
                })?;
                let mut emb = synth_embeddings(&sim, opts.noise_sigma, seed)?;
                if opts.shared_embedding {
                    let mut v = vec![0.0; cfg.sim.embedding_dim];
                    v[0] = 1.0;
                    let shared = Embedding::new(v)?;
                    emb.values_mut().for_each(|e| *e = shared.clone());
                }
                let offsets = opts.offsets.then_some(&sim.offsets);
                let dets = detections_from_gt(&sim.gt, &emb, offsets)?;
                let (w, h) = sim.gt.dims();
                let file = DetectionsFile::from_frames(w, h, cfg.sim.embedding_dim, &dets)?;
                let gt_dir = PathBuf::from("gt").join(&name);
                let det_path = PathBuf::from("detections").join(format!("{name}.json"));
                write_sequence_dir(&sim.gt, &out.join(&gt_dir))?;
                write_detections(&file, &out.join(&det_path))?;
                Ok(ManifestSequence {
                    name,
                    seed,
                    frames: sim.gt.len(),
                    objects: sim.objects.len(),
                    gt_dir,
                    detections: det_path,
                })
            })
            .collect::<CliResult<_>>()
    })?;

    let manifest = Manifest {
        tool_version: TOOL_VERSION.into(),
        rng_algorithm: RNG_ALGORITHM.into(),
        seed: cfg.sim.seed,
        sequences,
        config: config_json(cfg)?,
    };
    write_json(&manifest, &out.join("manifest.json"))?;
    Ok(manifest)
}
