use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fslm_cli::{parse_config, run, CliError, RunOptions};

/// Simulate paddle-controlled focusing through a multimode fiber.
#[derive(Debug, Parser)]
#[command(name = "fslm", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", args.config.display())))
        .and_then(|text| parse_config(&text))
        .and_then(|config| {
            if args.workers == Some(0) {
                return Err(CliError::Config("--workers must be ≥ 1".into()));
            }
            let opts = RunOptions {
                workers: args.workers,
                output_dir: args.output.clone(),
                quiet: args.quiet,
            };
            run(&config, &opts)
        });
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fslm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
