//! Scenario-driven front end for `rabi_blocks`: TOML scenarios in, CSV
//! trajectories and JSON reports out.
//!
//! Exit codes: 0 pass, 1 tolerance failure, 2 config or I/O error,
//! 3 comparison requested for a scenario without closed forms.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use commands::{Outcome, Status};
pub use config::ScenarioConfig;
pub use error::{CliError, Result};

/// Env var that replaces the default output directory.
pub const OUT_ENV: &str = "RABI_BLOCKS_OUT";
pub const DEFAULT_OUT: &str = "out";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Simulate,
    Compare,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Preset(String),
    Config(PathBuf),
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::Preset(name) => name.clone(),
            Source::Config(path) => path.display().to_string(),
        }
    }

    pub fn load(&self) -> Result<ScenarioConfig> {
        match self {
            Source::Preset(name) => presets::load(name),
            Source::Config(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                ScenarioConfig::from_toml_str(&text, &path.display().to_string())
            }
        }
    }
}

/// `--out` wins over the environment, which wins over `out`.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn execute(command: Command, config: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    match command {
        Command::Verify => commands::verify(config, out_dir),
        Command::Simulate => commands::simulate(config, out_dir),
        Command::Compare => commands::compare(config, out_dir),
    }
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(outcome) => outcome.status.exit_code(),
        Err(e) => e.exit_code(),
    }
}

/// Worst code of a batch: config errors, then missing closed forms, then failures.
pub fn combine_exit_codes(codes: impl IntoIterator<Item = i32>) -> i32 {
    codes
        .into_iter()
        .max_by_key(|&c| match c {
            0 => 0,
            1 => 1,
            3 => 2,
            _ => 3,
        })
        .unwrap_or(0)
}

/// Runs every source independently on a pool of `jobs` threads; results keep
/// the order of `sources`.
pub fn run_batch(command: Command, sources: &[Source], out_dir: &Path, jobs: usize) -> Vec<Result<Outcome>> {
    let work = || -> Vec<Result<Outcome>> {
        sources
            .par_iter()
            .map(|source| source.load().and_then(|config| execute(command, &config, out_dir)))
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}
