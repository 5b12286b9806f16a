use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rabi_blocks_cli::{combine_exit_codes, exit_code, output_dir, presets, run_batch, Command, Source};

#[derive(Parser)]
#[command(
    name = "rabi-blocks",
    version,
    about = "Block-structured quantum Rabi model scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check commutants, block structure and effective-model projections
    Verify(Args),
    /// Propagate and write one CSV per scenario
    Simulate(Args),
    /// Propagate and compare against the resonant closed forms
    Compare(Args),
    /// List the shipped presets
    Presets,
}

#[derive(clap::Args)]
struct Args {
    /// Shipped scenario name (repeatable)
    #[arg(long = "preset", value_name = "NAME")]
    presets: Vec<String>,
    /// Scenario TOML file (repeatable)
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,
    /// Output directory [default: $RABI_BLOCKS_OUT or ./out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Scenarios run in parallel
    #[arg(long, value_name = "K", default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
    };
    let mut sources: Vec<Source> = args.presets.into_iter().map(Source::Preset).collect();
    sources.extend(args.configs.into_iter().map(Source::Config));
    if sources.is_empty() {
        eprintln!("error: give at least one --preset or --config");
        return ExitCode::from(2);
    }
    let out = output_dir(args.out);
    let results = run_batch(command, &sources, &out, args.jobs);
    for (source, result) in sources.iter().zip(&results) {
        match result {
            Ok(o) => {
                let files: Vec<String> = o.files.iter().map(|f| f.display().to_string()).collect();
                println!("{} {}: {} [{}]", o.status, o.name, o.summary, files.join(", "));
            }
            Err(e) => eprintln!("error: {}: {e}", source.label()),
        }
    }
    ExitCode::from(combine_exit_codes(results.iter().map(exit_code)) as u8)
}
