//! `compound-fsc`: capacity, simulation, verification and estimation runs.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;

use config::{write_manifest, Config, Format};
use failure::Failure;

#[derive(Parser)]
#[command(name = "compound-fsc", version, about = "Compound finite-state channel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for C_n and Ĉ_n of a family.
    Capacity(Args),
    /// Monte Carlo transmission over one family member.
    Simulate(Args),
    /// Run the named self-check suites.
    Verify(Args),
    /// Training-then-coding sweep and estimation deviation table.
    Estimate(Args),
}

#[derive(clap::Args, Debug, Clone)]
struct Args {
    /// JSON config file or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Family JSON file.
    #[arg(long)]
    family: Option<PathBuf>,
    /// example1, bsc-pair, ge-gap, zero-capacity or noiseless.
    #[arg(long)]
    preset: Option<String>,
    /// Truncation depth of the example1 family.
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    /// identity, none or table:<file>.
    #[arg(long)]
    feedback: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    suite: Option<String>,
    /// Label of the channel in force (simulate).
    #[arg(long)]
    theta: Option<String>,
    /// Message count (simulate).
    #[arg(long)]
    messages: Option<u64>,
    /// universal, ml or ml:<label> (simulate).
    #[arg(long)]
    decoder: Option<String>,
}

impl Args {
    fn flags(&self) -> Config {
        Config {
            family: self.family.as_ref().map(|p| Value::String(p.to_string_lossy().into_owned())),
            preset: self.preset.clone(),
            depth: self.depth,
            n: self.n,
            feedback: self.feedback.clone().map(Value::String),
            trials: self.trials,
            seed: self.seed,
            format: self.format,
            suite: self.suite.clone(),
            theta: self.theta.clone(),
            messages: self.messages,
            decoder: self.decoder.clone(),
            ..Config::default()
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("COMPOUND_FSC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| Failure::input(format!("COMPOUND_FSC_THREADS must be an integer, got {raw}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::input(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    init_threads()?;
    let (name, args) = match &cli.command {
        Command::Capacity(a) => ("capacity", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Verify(a) => ("verify", a),
        Command::Estimate(a) => ("estimate", a),
    };
    let base = match &args.config {
        Some(path) => Config::load(path, name)?,
        None => Config::default(),
    };
    let mut cfg = base.overlay(args.flags());
    std::fs::create_dir_all(&args.out)?;
    let start = Instant::now();
    let written = match cli.command {
        Command::Capacity(_) => commands::capacity(&mut cfg, &args.out)?,
        Command::Simulate(_) => commands::simulate(&mut cfg, &args.out)?,
        Command::Verify(_) => commands::verify(&mut cfg, &args.out)?,
        Command::Estimate(_) => commands::estimate(&mut cfg, &args.out)?,
    };
    write_manifest(&args.out, name, &cfg, &written.files, start.elapsed().as_secs_f64())?;
    Ok(written.code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
