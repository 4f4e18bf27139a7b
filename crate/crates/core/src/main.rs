use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qdeeponet::cli;
use qdeeponet::Error;

#[derive(Parser)]
#[command(name = "qdeeponet", version, about = "Hybrid quantum DeepONet: data, training, evaluation")]
struct Args {
    /// Worker threads (overrides QDEEPONET_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file from a run config.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model; writes checkpoint, log CSV, and parameter report.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a checkpoint and export predicted/true field grids.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one dataset sample as CSV.
    ExportSample {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(args: Args) -> Result<(), Error> {
    let threads = args.threads.or_else(|| {
        std::env::var("QDEEPONET_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match args.cmd {
        Command::GenData { config, out } => {
            let s = cli::cmd_gen_data(&config, &out, args.seed)?;
            println!(
                "samples={} d={} grid={} seed={} out={}",
                s.samples,
                s.sensors,
                s.grid,
                s.seed,
                out.display()
            );
        }
        Command::Train {
            config,
            data,
            out_dir,
        } => {
            let s = cli::cmd_train(&config, &data, &out_dir, args.seed)?;
            for r in &s.log.rows {
                println!(
                    "epoch={} lr={:e} train_loss={:e} test_rel_l2={:e}",
                    r.epoch, r.lr, r.train_loss, r.test_rel_l2
                );
            }
            println!("params={} checkpoint={}", s.counts.total(), s.checkpoint.display());
        }
        Command::Eval { ckpt, data, out } => {
            let s = cli::cmd_eval(&ckpt, &data, &out)?;
            println!(
                "rel_l2_percent={:.6} mse={:e} points={} exports={}",
                100.0 * s.rel_l2,
                s.mse,
                s.points,
                s.exports.len()
            );
        }
        Command::ExportSample { data, index, out } => {
            cli::cmd_export_sample(&data, index, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} msg={:?}", e.kind(), msg);
            ExitCode::FAILURE
        }
    }
}
