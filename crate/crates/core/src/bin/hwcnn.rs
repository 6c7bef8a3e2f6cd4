use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hwcnn::checkpoint::Checkpoint;
use hwcnn::config::{inspect_report, load_config};
use hwcnn::data::Split;
use hwcnn::run::{eval_checkpoint, load_samples, train_run, RunOptions};
use hwcnn::verify::run_suite;

#[derive(Parser)]
#[command(
    name = "hwcnn",
    version,
    about = "Train and check Hamming-weight preserving quantum CNNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a config; writes metrics.csv and checkpoint.json into DIR.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Fill the seconds column with elapsed time instead of 0.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the invariant and oracle suite.
    Verify {
        #[arg(long)]
        quick: bool,
    },
    /// Print layer shapes, depths and parameter counts.
    Inspect {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> hwcnn::Result<bool> {
    match cli.command {
        Command::Train {
            config,
            out,
            seed,
            epochs,
            wall_clock,
        } => {
            let cfg = load_config(&config)?;
            for n in &cfg.notes {
                eprintln!("note: {n}");
            }
            let epochs_left = epochs.unwrap_or(cfg.train.epochs);
            let (train, test) = if epochs_left == 0 {
                (Vec::new(), Vec::new())
            } else {
                (load_samples(&cfg, Split::Train)?, load_samples(&cfg, Split::Test)?)
            };
            let opts = RunOptions {
                seed,
                epochs,
                wall_clock,
                out_dir: Some(out.clone()),
            };
            let res = train_run(&cfg, &train, &test, &opts, |r| {
                eprintln!(
                    "epoch {:>3} {:<5} loss {:.4} accuracy {:.4}",
                    r.epoch, r.split, r.loss, r.accuracy
                );
            })?;
            if res.skipped > 0 {
                eprintln!("warning: skipped {} all-zero samples", res.skipped);
            }
            if res.best_epoch > 0 {
                println!(
                    "best test accuracy {:.4} at epoch {}; outputs in {}",
                    res.best_test_accuracy,
                    res.best_epoch,
                    out.display()
                );
            } else {
                println!("no epochs run; initial checkpoint in {}", out.display());
            }
            Ok(true)
        }
        Command::Eval { config, checkpoint } => {
            let cfg = load_config(&config)?;
            let model = cfg.build_model()?;
            let ck = Checkpoint::load(&checkpoint)?;
            let test = load_samples(&cfg, Split::Test)?;
            let m = eval_checkpoint(&cfg, &model, &ck, &test)?;
            println!("split,loss,accuracy");
            println!("test,{:.10},{:.6}", m.loss, m.accuracy);
            if m.skipped > 0 {
                eprintln!("warning: skipped {} all-zero samples", m.skipped);
            }
            Ok(true)
        }
        Command::Verify { quick } => {
            let results = run_suite(quick);
            let mut ok = true;
            for c in &results {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            let passed = results.iter().filter(|c| c.passed).count();
            println!("{passed}/{} checks passed", results.len());
            Ok(ok)
        }
        Command::Inspect { config } => {
            let cfg = load_config(&config)?;
            print!("{}", inspect_report(&cfg)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
