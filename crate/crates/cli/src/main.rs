//! `gate`: train, render, compare, visualize and inspect GATE neural AO runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gate_core::config::{RunConfig, SceneSource};
use gate_core::pipeline;

#[derive(Parser, Debug)]
#[command(name = "gate", version, about = "Geometry-aware trained encodings for neural ambient occlusion")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Drop timings from artifacts so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Built-in scene: corner, quad, stadium or mixed.
    #[arg(long, global = true)]
    fixture: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write checkpoint, metrics CSV and images.
    Train {
        #[arg(long)]
        iters: Option<u64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        group: Option<usize>,
        #[arg(long)]
        candidates: Option<usize>,
        /// Checkpoint output path (default `<out>/checkpoint.bin`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Render and log image metrics every N iterations.
        #[arg(long)]
        log_every: Option<u64>,
    },
    /// Render an inference image from a checkpoint.
    Render {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also render the AO reference and print `mse=… psnr=…`.
        #[arg(long)]
        reference: bool,
    },
    /// Train GATE and a parameter-matched hash grid and report both.
    Compare {
        #[arg(long)]
        iters: Option<u64>,
        /// Fix the hash-grid table size instead of matching parameter counts.
        #[arg(long)]
        table_size: Option<u32>,
    },
    /// Voronoi view of the feature layout plus layout statistics.
    Viz,
    /// Scene statistics and chosen adaptive resolutions.
    Stats,
}

fn build_config(g: &Global) -> Result<RunConfig, String> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p).map_err(|e| format!("loading {}: {e}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(f) = &g.fixture {
        cfg.scene = SceneSource::Fixture(f.clone());
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    cfg.deterministic |= g.deterministic;
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> Result<(), String> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "n/a".into())
}

fn run(cli: Cli) -> Result<(), String> {
    init_threads(cli.global.threads)?;
    let mut cfg = build_config(&cli.global)?;
    let err = |e: gate_core::Error| e.to_string();
    match cli.command {
        Command::Train {
            iters,
            batch,
            group,
            candidates,
            checkpoint,
            log_every,
        } => {
            if let Some(n) = iters {
                cfg.trainer.iterations = n;
            }
            if let Some(b) = batch {
                cfg.trainer.batch_size = b;
            }
            if let Some(g) = group {
                cfg.trainer.group_size = g;
            }
            if let Some(m) = candidates {
                cfg.trainer.candidates = m;
            }
            if let Some(l) = log_every {
                cfg.log_every = l;
            }
            let s = pipeline::cmd_train(&cfg, checkpoint.as_deref()).map_err(err)?;
            println!(
                "trained {} iterations (config {}): loss={} mse={} psnr={}",
                s.iterations,
                s.config_hash,
                fmt_opt(s.final_loss),
                fmt_opt(s.final_mse),
                fmt_opt(s.final_psnr)
            );
            println!("checkpoint {}", s.checkpoint.display());
            println!("metrics {}", s.metrics.display());
        }
        Command::Render { checkpoint, reference } => {
            let s = pipeline::cmd_render(&cfg, &checkpoint, reference).map_err(err)?;
            println!("image {}", s.image.display());
            if let (Some(m), Some(p)) = (s.mse, s.psnr) {
                println!("mse={m:.6e} psnr={p:.3}");
            }
        }
        Command::Compare { iters, table_size } => {
            if let Some(n) = iters {
                cfg.trainer.iterations = n;
            }
            let r = pipeline::compare(&cfg, table_size, true).map_err(err)?;
            println!("{}", serde_json::to_string_pretty(&r).map_err(|e| e.to_string())?);
        }
        Command::Viz => {
            let r = pipeline::cmd_viz(&cfg).map_err(err)?;
            println!(
                "total_slots={} megabytes={:.3} voronoi {}",
                r.layout.total_slots,
                r.layout.megabytes,
                cfg.out_dir.join("voronoi.ppm").display()
            );
        }
        Command::Stats => {
            let r = pipeline::cmd_stats(&cfg).map_err(err)?;
            println!("{}", serde_json::to_string_pretty(&r).map_err(|e| e.to_string())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
