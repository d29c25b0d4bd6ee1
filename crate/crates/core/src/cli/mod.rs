//! The command-line pipeline: `genscan`, `synth`, `train`, `eval` and
//! `gradcheck`, each driven by one [`RunConfig`] and leaving a
//! [`RunManifest`] next to its outputs.
//!
//! Exit codes: 0 success, 1 I/O or data error, 2 config error, 3 output
//! collision, 4 numeric failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{list_scenes, SceneFiles};
pub use config::{MetricsConfig, Needs, PathsConfig, RunConfig, ScanSection};
pub use manifest::{digest_file, sha256_hex, FileDigest, RunManifest, MANIFEST_FILE};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("refusing to overwrite {} (pass --force)", .0.display())]
    Collision(PathBuf),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Runtime(crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Collision(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        use crate::Error as E;
        match e {
            E::InvalidInput(_) | E::InvalidRange { .. } | E::InvalidLabel { .. } => CliError::Config(e.to_string()),
            E::Diverged { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Runtime(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Genscan,
    Synth,
    Train,
    Eval,
    Gradcheck,
}

impl Command {
    pub const ALL: [Command; 5] = [Command::Genscan, Command::Synth, Command::Train, Command::Eval, Command::Gradcheck];

    pub fn name(self) -> &'static str {
        match self {
            Command::Genscan => "genscan",
            Command::Synth => "synth",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Gradcheck => "gradcheck",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CliOptions {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub force: bool,
    pub jobs: Option<usize>,
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandReport {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub warnings: Vec<String>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

/// Loads the config (or defaults), applies overrides and runs `cmd` on a
/// thread pool of `opts.jobs` workers.
pub fn run(cmd: Command, opts: &CliOptions) -> Result<CommandReport, CliError> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    match opts.jobs {
        Some(0) => Err(CliError::Config("--jobs must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| run_config(cmd, &cfg, opts.force)),
        None => run_config(cmd, &cfg, opts.force),
    }
}

/// Runs `cmd` with an already resolved config.
pub fn run_config(cmd: Command, cfg: &RunConfig, force: bool) -> Result<CommandReport, CliError> {
    match cmd {
        Command::Genscan => commands::genscan(cfg, force),
        Command::Synth => commands::synth(cfg, force),
        Command::Train => commands::train(cfg, force),
        Command::Eval => commands::eval(cfg, force),
        Command::Gradcheck => commands::gradcheck(cfg, force),
    }
}
