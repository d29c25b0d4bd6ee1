use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oodlab::cli::{run, CliOptions, Command};

#[derive(Parser)]
#[command(name = "oodlab", version, about = "LiDAR outlier synthesis, training and evaluation")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "OODLAB_JOBS")]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Generate procedural scans.
    Genscan,
    /// Inject synthetic outliers into scenes.
    Synth,
    /// Train a classifier and write a checkpoint.
    Train,
    /// Score a checkpoint on labelled scenes.
    Eval,
    /// Finite-difference check of the loss gradients.
    Gradcheck,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cmd = match args.command {
        Cmd::Genscan => Command::Genscan,
        Cmd::Synth => Command::Synth,
        Cmd::Train => Command::Train,
        Cmd::Eval => Command::Eval,
        Cmd::Gradcheck => Command::Gradcheck,
    };
    let opts = CliOptions { config: args.config, seed: args.seed, force: args.force, jobs: args.jobs };
    match run(cmd, &opts) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", report.summary);
            if !report.summary.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
