//! Command-line front end for the flameball solvers.
//!
//! Exit codes: 0 success, 1 validation failure, 2 solver non-convergence,
//! 3 configuration or input error.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{parse_nonlinearity, BranchChoice, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "flameball",
    version,
    about = "Radial flame-ball solutions: closed forms, shooting, fixed point, continuation"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct SharedArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub eps_min: Option<f64>,
    #[arg(long, global = true)]
    pub eps_max: Option<f64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// `heaviside`, `ramp`, `smoothed` (with `--n`), or a JSON object.
    #[arg(long, global = true)]
    pub nonlinearity: Option<String>,
    /// Smoothing level for `--nonlinearity smoothed`.
    #[arg(long, global = true)]
    pub n: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Composite Heaviside bifurcation curve (ball and annulus branches).
    HeavisideTrace {
        /// Ball-branch samples between eps-min and the fold.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Shooting solve for a continuous nonlinearity.
    Shoot {
        #[arg(long, value_enum)]
        branch: Option<BranchChoice>,
    },
    /// Large-beta limits a0 and x0.
    Asymptotics,
    /// Nonexistence bounds eps0 and eps1.
    EpsBounds,
    /// Picard iteration of the fixed-point operator.
    FixedPoint {
        /// Grid intervals on [0, 1].
        #[arg(long)]
        grid: Option<usize>,
        /// Homotopy parameter in [0, 1].
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        maxit: Option<usize>,
        #[arg(long)]
        omega: Option<f64>,
        /// Starting beta.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Re-check a profile CSV: pointwise bounds and the flux identity.
    Validate {
        profile: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
    },
}

impl Cli {
    /// Config file merged with the flags (flags win), then range-checked.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let s = &self.shared;
        let file = match &s.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let nonlinearity = match &s.nonlinearity {
            Some(arg) => Some(parse_nonlinearity(arg, s.n)?),
            None if s.n.is_some() => return Err(CliError::config("n", "only meaningful with --nonlinearity smoothed")),
            None => None,
        };
        let mut flags = RunConfig {
            nonlinearity,
            theta: s.theta,
            eps: s.eps,
            eps_min: s.eps_min,
            eps_max: s.eps_max,
            tol: s.tol,
            out_dir: s.out_dir.clone(),
            ..Default::default()
        };
        match &self.command {
            Command::HeavisideTrace { samples } => flags.samples = *samples,
            Command::Shoot { branch } => flags.branch = *branch,
            Command::FixedPoint {
                grid,
                t,
                maxit,
                omega,
                beta,
            } => {
                flags.grid = *grid;
                flags.t = *t;
                flags.maxit = *maxit;
                flags.omega = *omega;
                flags.beta = *beta;
            }
            Command::Validate { beta, .. } => flags.beta = *beta,
            Command::Asymptotics | Command::EpsBounds => {}
        }
        let cfg = file.merged(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run(&self) -> Result<Outcome, CliError> {
        let cfg = self.resolve()?;
        match &self.command {
            Command::HeavisideTrace { .. } => commands::heaviside_trace(&cfg),
            Command::Shoot { .. } => commands::shoot(&cfg),
            Command::Asymptotics => commands::asymptotics(&cfg),
            Command::EpsBounds => commands::eps_bounds(&cfg),
            Command::FixedPoint { .. } => commands::fixed_point(&cfg),
            Command::Validate { profile, .. } => commands::validate(&cfg, profile),
        }
    }
}
