use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use covcert::experiment::{run_experiment, write_outputs, ExperimentConfig};

/// Run a covariance-bound experiment described by a JSON config.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Experiment config (strict JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.path` in the config. Default: ./out
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `sampler.seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let (Some(seed), Some(sampler)) = (args.seed, cfg.sampler.as_mut()) {
        sampler.seed = seed;
    }
    let out = args
        .out
        .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match write_outputs(&report, &out) {
        Ok(paths) => paths.iter().for_each(|p| println!("wrote {}", p.display())),
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            return ExitCode::from(2);
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.pass {
        println!("{}: all verifications passed", cfg.kind.name());
        ExitCode::SUCCESS
    } else {
        for f in report.failures() {
            eprintln!("failed: {f}");
        }
        ExitCode::from(1)
    }
}
