use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use maslov_lab::harness::EstimatorConfig;
use maslov_lab::spinor::OracleConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Stratify,
    Charts,
    MaslovIndex,
    PhaseCheck,
    Fresnel,
    PhiSample,
    Integrability,
    Growth,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GrowthFamily {
    #[default]
    Sigma1,
    Sigma2,
}

/// Per-command overrides of the numerical estimators. Unset fields keep the
/// library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOverrides {
    pub samples: Option<u64>,
    pub groups: Option<usize>,
    pub eps_schedule: Option<Vec<f64>>,
}

/// Everything a run depends on. Defaults: `n = 1`, `seed = 0`, `tol` unset
/// (each command then uses its acceptance tolerance), no input file, JSON on
/// stdout, no overrides, `sigma1` growth family, no quadrature oracle, and
/// the report range `1..=64` unless `n` was given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub input_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub out: Option<PathBuf>,
    pub overrides: EstimatorOverrides,
    pub family: GrowthFamily,
    pub oracle: bool,
    pub n_range: Option<(usize, usize)>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            n: 1,
            seed: 0,
            tol: None,
            input_path: None,
            output_format: OutputFormat::Json,
            out: None,
            overrides: EstimatorOverrides::default(),
            family: GrowthFamily::Sigma1,
            oracle: false,
            n_range: None,
        }
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn estimator(&self) -> EstimatorConfig {
        let mut e = EstimatorConfig { seed: self.seed, samples: self.overrides.samples, ..EstimatorConfig::default() };
        if let Some(g) = self.overrides.groups {
            e.groups = g;
        }
        e
    }

    pub fn oracle_config(&self) -> OracleConfig {
        let mut o = OracleConfig::default();
        if let Some(s) = &self.overrides.eps_schedule {
            o.eps_schedule = s.clone();
        }
        o
    }
}

#[derive(Debug, Parser)]
#[command(name = "maslov-lab", version, about = "Numerical checks on the lagrangian grassmannian and its Maslov cycle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Half-dimension of the symplectic space.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Pass threshold; each command documents its own default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte Carlo samples per shell.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Median-of-means groups.
    #[arg(long, global = true)]
    pub groups: Option<usize>,
    /// Comma-separated damping parameters, largest first.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps_schedule: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Stratum of a frame (`--input`, 2n x n) relative to L_0.
    Stratify,
    /// Chart coordinates of a frame, or the seeded transition-identity check.
    Charts,
    /// Maslov index of a path file (default: the n = 1 calibration loop).
    MaslovIndex,
    /// Checks an S-point given as JSON {n, A, v, beta}.
    PhaseCheck,
    /// Closed-form Fresnel integral of a symmetric matrix.
    Fresnel {
        /// Also run the damped quadrature oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Evaluation distribution at a Gaussian, with the oscillatory oracle.
    PhiSample,
    /// Shell integrals of |det A|^{-1/2} and the scaling ratio.
    Integrability,
    /// |phi| along a family approaching the Maslov cycle.
    Growth {
        #[arg(long, value_enum, default_value_t = GrowthFamily::Sigma1)]
        family: GrowthFamily,
    },
    /// Full acceptance suite as one JSON document.
    Report {
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
}

impl Cli {
    pub fn into_config(self) -> RunConfig {
        let (command, family, oracle, range) = match self.command {
            CliCommand::Stratify => (Command::Stratify, GrowthFamily::Sigma1, false, None),
            CliCommand::Charts => (Command::Charts, GrowthFamily::Sigma1, false, None),
            CliCommand::MaslovIndex => (Command::MaslovIndex, GrowthFamily::Sigma1, false, None),
            CliCommand::PhaseCheck => (Command::PhaseCheck, GrowthFamily::Sigma1, false, None),
            CliCommand::Fresnel { oracle } => (Command::Fresnel, GrowthFamily::Sigma1, oracle, None),
            CliCommand::PhiSample => (Command::PhiSample, GrowthFamily::Sigma1, false, None),
            CliCommand::Integrability => (Command::Integrability, GrowthFamily::Sigma1, false, None),
            CliCommand::Growth { family } => (Command::Growth, family, false, None),
            CliCommand::Report { n_min, n_max } => (Command::Report, GrowthFamily::Sigma1, false, Some((n_min, n_max))),
        };
        let c = self.common;
        let n_range = range.and_then(|(lo, hi)| match (lo, hi, c.n) {
            (None, None, None) => None,
            (lo, hi, n) => Some((lo.or(n).unwrap_or(1), hi.or(n).unwrap_or(64))),
        });
        RunConfig {
            n: c.n.unwrap_or(1),
            seed: c.seed,
            tol: c.tol,
            input_path: c.input,
            output_format: c.format,
            out: c.out,
            overrides: EstimatorOverrides { samples: c.samples, groups: c.groups, eps_schedule: c.eps_schedule },
            family,
            oracle,
            n_range,
            ..RunConfig::new(command)
        }
    }
}
