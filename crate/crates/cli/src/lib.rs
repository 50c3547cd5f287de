//! `obskit` command-line front end.
//!
//! Each subcommand reads one JSON run configuration, does its work on a
//! rayon pool capped by `OBSKIT_THREADS`, and writes CSV, JSON and SVG
//! files into the output directory. Work items are collected in index order,
//! so outputs do not depend on the number of workers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use obskit_core::wing::StrainKind;
use obskit_core::ObsError;

use crate::config::RunConfig;
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "obskit", version, about = "Observability studies for delayed and encoded measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Use the 51 x 21 station grid.
    #[arg(long, global = true)]
    pub full: bool,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Simulate the wing and record strain and encoder output at probe points.
    Simulate,
    /// Station-wise Gramian metrics over a grid, with lambda_min heatmaps.
    GramianGrid {
        /// Restrict to one strain kind.
        #[arg(long)]
        kind: Option<StrainKind>,
    },
    /// Gramian-optimal sensor placement on the veins.
    Place,
    /// Spatial-mean det_root over a grid of NLA slopes and half-max points.
    NlaSweep,
    /// Determinant relation between the observability matrices of h and g(h).
    LieCheck {
        /// System name; overrides `lie_check.system`.
        #[arg(long, value_enum)]
        system: Option<config::LieSystem>,
        /// Comma-separated state; overrides `lie_check.states`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        state: Option<Vec<f64>>,
    },
    /// Rank and verdict for a linear system with a windowed output.
    LinearDelay,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::GramianGrid { .. } => "gramian-grid",
            Command::Place => "place",
            Command::NlaSweep => "nla-sweep",
            Command::LieCheck { .. } => "lie-check",
            Command::LinearDelay => "linear-delay",
        }
    }
}

/// Configuration errors that are not [`ObsError`]s.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| anyhow::Error::new(ConfigError(format!("{e:#}"))))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out_dir = match &cli.out {
        Some(p) => p.clone(),
        None => cfg.resolve(&cfg.output_dir),
    };
    let pool = worker_pool()?;
    let mut out = OutputDir::create(&out_dir)?;
    pool.install(|| match &cli.command {
        Command::Simulate => commands::simulate::run(&cfg, &mut out),
        Command::GramianGrid { kind } => commands::grid::run(&cfg, cli.full, *kind, &mut out),
        Command::Place => commands::place::run(&cfg, &mut out),
        Command::NlaSweep => commands::sweep::run(&cfg, cli.full, &mut out),
        Command::LieCheck { system, state } => commands::lie::run(&cfg, *system, state.as_deref(), &mut out),
        Command::LinearDelay => commands::delay::run(&cfg, &mut out),
    })?;
    Ok(out.written().to_vec())
}

fn worker_pool() -> anyhow::Result<rayon::ThreadPool> {
    let threads = match std::env::var("OBSKIT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ConfigError(format!("OBSKIT_THREADS must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("starting worker pool")
}

/// 0 success, 2 configuration or input error, 3 numeric failure, 4 infeasible optimization.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ObsError>() {
            return match e {
                ObsError::InfeasibleStart { .. } => 4,
                ObsError::Diverged { .. }
                | ObsError::Evaluation(_)
                | ObsError::Unobservable { .. }
                | ObsError::Perturbation { .. } => 3,
                _ => 2,
            };
        }
    }
    2
}
