//! Run configs, experiments and manifests behind the `pinch` command.

pub mod classify;
pub mod common;
pub mod lamination;
pub mod pinch;
pub mod render;
pub mod selftest;

use std::path::{Path, PathBuf};

use pinchdyn::Result;
use serde::Serialize;

use common::{load_config, Audit, Outcome};

pub const MANIFEST_SCHEMA: &str = "pinchdyn.manifest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Render,
    Classify,
    ThmaProbe,
    ThmdPinch,
    ModuliSelftest,
    Lamination,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Render => "render",
            Command::Classify => "classify",
            Command::ThmaProbe => "thma-probe",
            Command::ThmdPinch => "thmd-pinch",
            Command::ModuliSelftest => "moduli-selftest",
            Command::Lamination => "lamination",
        }
    }
}

/// A command with its command-line overrides.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    /// The fully resolved config, defaults and overrides applied.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub audits: Vec<Audit>,
    pub all_pass: bool,
    pub summary: serde_json::Value,
}

fn resolved<T: Serialize>(cfg: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

/// Loads the config, runs the command and writes `manifest.json` into the
/// output directory.
pub fn execute(inv: &Invocation) -> Result<Manifest> {
    let text = match &inv.config {
        Some(p) => std::fs::read_to_string(p)?,
        None => "{}".to_string(),
    };
    let out = inv.out.clone().unwrap_or_else(|| Path::new("runs").join(inv.command.name()));
    let (seed, config, outcome): (u64, serde_json::Value, Outcome) = match inv.command {
        Command::Render => {
            let mut cfg = load_config(&render::RenderConfig::default(), &text)?;
            cfg.seed = inv.seed.unwrap_or(cfg.seed);
            let cfg = cfg.resolve();
            (cfg.seed, resolved(&cfg)?, render::run(&cfg, &out)?)
        }
        Command::Classify => {
            let mut cfg = load_config(&classify::ClassifyConfig::default(), &text)?;
            cfg.seed = inv.seed.unwrap_or(cfg.seed);
            let cfg = cfg.resolve()?;
            (cfg.seed, resolved(&cfg)?, classify::run(&cfg, &out)?)
        }
        Command::ThmaProbe | Command::ThmdPinch => {
            let mode = if inv.command == Command::ThmdPinch { pinch::Mode::Wandering } else { pinch::Mode::Divergence };
            let mut cfg = load_config(&pinch::PinchConfig::for_mode(mode), &text)?;
            cfg.seed = inv.seed.unwrap_or(cfg.seed);
            (cfg.seed, resolved(&cfg)?, pinch::run(&cfg, mode, &out)?)
        }
        Command::ModuliSelftest => {
            let mut cfg = load_config(&selftest::SelftestConfig::default(), &text)?;
            cfg.seed = inv.seed.unwrap_or(cfg.seed);
            (cfg.seed, resolved(&cfg)?, selftest::run(&cfg, &out)?)
        }
        Command::Lamination => {
            let mut cfg = load_config(&lamination::LaminationConfig::default(), &text)?;
            cfg.seed = inv.seed.unwrap_or(cfg.seed);
            (cfg.seed, resolved(&cfg)?, lamination::run(&cfg, &out)?)
        }
    };
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.into(),
        command: inv.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        threads: rayon::current_num_threads(),
        config,
        all_pass: outcome.all_pass(),
        outputs: outcome.outputs,
        audits: outcome.audits,
        summary: outcome.summary,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
