use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use panoptrack_cli::{
    cmd_eval, cmd_simulate, cmd_track, CliConfig, CliError, CliResult, EXIT_INTERNAL,
};

#[derive(Parser)]
#[command(
    name = "panoptrack",
    version,
    about = "Panoptic tracking: evaluate, track, simulate"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-sequence work (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print results and errors as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predicted panoptic sequences against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Directory for per-sequence and aggregate reports; overrides
        /// `report_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Associate per-frame detections into tracks.
    Track {
        #[arg(long)]
        detections: PathBuf,
        /// Sequence directory whose class channel gives the semantic labels.
        #[arg(long)]
        semantic: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic ground truth and detections.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: Option<&Path>, jobs: Option<usize>) -> CliResult<CliConfig> {
    let mut cfg = match path {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) -> CliResult<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = load_config(cli.config.as_deref(), cli.jobs)?;
    match cli.command {
        Command::Eval { gt, pred, out } => {
            let out = out.or_else(|| cfg.report_dir.clone());
            let r = cmd_eval(&gt, &pred, &cfg, out.as_deref())?;
            if cli.json {
                let seqs: Vec<_> = r
                    .sequences
                    .iter()
                    .map(|(n, r)| serde_json::json!({"sequence": n, "headline": r.headline()}))
                    .collect();
                print_json(&serde_json::json!({
                    "sequences": seqs,
                    "aggregate": r.aggregate.headline(),
                }))?;
            } else {
                println!(
                    "{:<12} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
                    "sequence", "PQ", "SQ", "AQ", "STQ", "TQ", "PAT"
                );
                let rows = r.sequences.iter().map(|(n, r)| (n.as_str(), r));
                for (n, r) in rows.chain(std::iter::once(("dataset", &r.aggregate))) {
                    let h = r.headline();
                    println!(
                        "{n:<12} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
                        h.pq, h.sq, h.aq, h.stq, h.tq, h.pat
                    );
                }
            }
        }
        Command::Track {
            detections,
            semantic,
            out,
        } => {
            let r = cmd_track(&detections, &semantic, &cfg, &out)?;
            if cli.json {
                print_json(&r)?;
            } else {
                println!(
                    "{} frames, {} tracks -> {}",
                    r.frames.len(),
                    r.tracks,
                    out.display()
                );
            }
        }
        Command::Simulate { out, seed } => {
            if let Some(s) = seed {
                cfg.sim.seed = s;
            }
            let m = cmd_simulate(&cfg, &out)?;
            if cli.json {
                print_json(&m)?;
            } else {
                println!(
                    "{} sequences (seed {}, {}) -> {}",
                    m.sequences.len(),
                    m.seed,
                    m.rng_algorithm,
                    out.display()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let result = std::panic::catch_unwind(|| run(cli)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(CliError::Internal(msg))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if json {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error: {e}");
            }
            let code = e.exit_code();
            debug_assert!(code == 1 || code == EXIT_INTERNAL);
            ExitCode::from(code as u8)
        }
    }
}
