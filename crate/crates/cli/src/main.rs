use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pinch_cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(name = "pinch", version, about = "Baker domains, laminations and pinching deformations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run config; keys left out take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed overriding the one in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Dynamical-plane raster, fixed points and Baker membership samples.
    Render,
    /// Baker-domain type table.
    Classify,
    /// Pinch of a leaf ending at infinity.
    ThmaProbe,
    /// Pinch of the fundamental-annulus lamination.
    ThmdPinch,
    /// Modulus calibrations and randomized inequality checks.
    ModuliSelftest,
    /// Lamination and grand orbit with validation.
    Lamination,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let command = match cli.command {
        Cmd::Render => Command::Render,
        Cmd::Classify => Command::Classify,
        Cmd::ThmaProbe => Command::ThmaProbe,
        Cmd::ThmdPinch => Command::ThmdPinch,
        Cmd::ModuliSelftest => Command::ModuliSelftest,
        Cmd::Lamination => Command::Lamination,
    };
    let inv = Invocation { command, config: cli.config, out: cli.out, seed: cli.seed };
    match execute(&inv) {
        Ok(m) => {
            for a in &m.audits {
                println!("{} {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            if m.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
