//! Command-line front end: configuration, presets and the `spectrum`, `scan`,
//! `evolve` and `asymptote` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod presets;

use std::path::{Path, PathBuf};
use std::time::Instant;

use bswg_core::BoundState;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::commands::Diagnostics;
use crate::config::{InitialSpec, Overrides, PropagatorKind, RunConfig};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bswg",
    version,
    about = "Bound states and emission dynamics of emitters on a coupled-cavity waveguide"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Pole functions F+-(E) and the bound-state table.
    Spectrum,
    /// BOC count over a (delta, g) grid.
    Scan,
    /// Exact time evolution: populations and optional field map.
    Evolve,
    /// Bound-state prediction compared with the exact evolution.
    Asymptote,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Scan => "scan",
            Command::Evolve => "evolve",
            Command::Asymptote => "asymptote",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML or JSON configuration; a run manifest is accepted as well.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Start from a shipped preset (fig2a-d, fig3a-i, fig4).
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(
        long,
        global = true,
        value_name = "DIR",
        env = "BSWG_OUT_DIR",
        default_value = "bswg-out"
    )]
    pub out: PathBuf,
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true, value_name = "INT")]
    pub workers: Option<usize>,
    /// Accepted for scripts; every computation is deterministic.
    #[arg(long, global = true)]
    pub seedless: bool,

    #[arg(long, global = true, help_heading = "Overrides")]
    pub g: Option<f64>,
    /// Emitter energy, shared by all emitters.
    #[arg(
        long,
        global = true,
        allow_hyphen_values = true,
        help_heading = "Overrides"
    )]
    pub delta: Option<f64>,
    /// Place a pair at this separation.
    #[arg(long, global = true, help_heading = "Overrides")]
    pub separation: Option<usize>,
    #[arg(long, global = true, help_heading = "Overrides")]
    pub n_cavities: Option<usize>,
    #[arg(long, global = true, help_heading = "Overrides")]
    pub n_k: Option<usize>,
    #[arg(long, global = true, help_heading = "Overrides")]
    pub t_max: Option<f64>,
    #[arg(long, global = true, help_heading = "Overrides")]
    pub dt: Option<f64>,
    /// Site index, L, C, R, +, -, even1, even2, odd or symmetric3.
    #[arg(
        long,
        global = true,
        allow_hyphen_values = true,
        help_heading = "Overrides"
    )]
    pub initial: Option<InitialSpec>,
    #[arg(long, global = true, help_heading = "Overrides")]
    pub field_map: Option<bool>,
    #[arg(long, global = true, value_parser = parse_propagator, help_heading = "Overrides")]
    pub propagator: Option<PropagatorKind>,
}

fn parse_propagator(s: &str) -> Result<PropagatorKind, String> {
    match s {
        "dense" => Ok(PropagatorKind::Dense),
        "chebyshev" => Ok(PropagatorKind::Chebyshev),
        _ => Err(format!("expected `dense` or `chebyshev`, got `{s}`")),
    }
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            g: self.g,
            delta: self.delta,
            separation: self.separation,
            n_cavities: self.n_cavities,
            n_k: self.n_k,
            t_max: self.t_max,
            dt: self.dt,
            initial: self.initial.clone(),
            field_map: self.field_map,
            propagator: self.propagator,
        }
    }
}

/// Record of one run, written as `manifest.json` next to the outputs. Passing
/// it back with `--config` repeats the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub wall_time_s: f64,
    pub workers: usize,
    pub bound_states: Vec<BoundState>,
    pub outputs: Vec<String>,
    pub diagnostics: Diagnostics,
}

pub const MANIFEST: &str = "manifest.json";

pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    let g = &cli.global;
    let cfg = RunConfig::resolve(g.preset.as_deref(), g.config.as_deref(), &g.overrides())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = g.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::create_dir_all(&g.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", g.out.display())))?;
    let start = Instant::now();
    let outcome = pool.install(|| execute(cli.command, &cfg, &g.out))?;
    let manifest = RunManifest {
        tool: "bswg".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command,
        config: cfg,
        wall_time_s: start.elapsed().as_secs_f64(),
        workers: pool.current_num_threads(),
        bound_states: outcome.bound_states,
        outputs: outcome.outputs,
        diagnostics: outcome.diagnostics,
    };
    check_outputs(&g.out, &manifest.outputs)?;
    let path = g.out.join(MANIFEST);
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(manifest)
}

fn execute(command: Command, cfg: &RunConfig, out: &Path) -> Result<commands::Outcome, CliError> {
    match command {
        Command::Spectrum => commands::spectrum(cfg, out),
        Command::Scan => commands::scan(cfg, out),
        Command::Evolve => commands::evolve(cfg, out),
        Command::Asymptote => commands::asymptote(cfg, out),
    }
}

fn check_outputs(dir: &Path, files: &[String]) -> Result<(), CliError> {
    for f in files {
        let len = std::fs::metadata(dir.join(f))?.len();
        if len == 0 {
            return Err(CliError::Io(format!("output {f} is empty")));
        }
    }
    Ok(())
}
