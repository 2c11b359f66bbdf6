use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nozzleflow::cli::{configure_threads, load_config, run, RunStatus};

/// Subsonic potential flow through infinitely long nozzles.
#[derive(Debug, Parser)]
#[command(name = "nozzleflow", version)]
struct Args {
    /// Run configuration (`key = value` lines, `#` comments).
    config: PathBuf,

    /// Directory for output files; overrides `output.dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Replace a configuration value, e.g. `--override flux.m0=0.3`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let status =
        match load_config(&args.config, args.output_dir, &args.overrides).and_then(|c| run(&c)) {
            Ok(outcome) => {
                for line in &outcome.summary {
                    println!("{line}");
                }
                outcome.status
            }
            Err(e) => {
                eprintln!("error: {e}");
                RunStatus::Failure
            }
        };
    ExitCode::from(status.exit_code() as u8)
}
