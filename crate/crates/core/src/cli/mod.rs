//! Command-line front end: one subcommand per module, each writing a JSON report
//! and CSV side files into the output directory.

mod commands;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use report::{Artifacts, Check, Report, Timing, SCHEMA_VERSION};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BELTRAMI_LAB_OUT";

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "beltrami-lab", version, about = "Numerical checks for stretched cylinders, Beltrami coefficients and Bers norms")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Directory for the JSON report and CSV side files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "reports")]
    #[serde(skip)]
    pub out_dir: PathBuf,

    /// Seed for every random choice; recorded in the report.
    #[arg(long, global = true, default_value_t = 20_240_601)]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Hyperbolic cylinder: injectivity-radius bound, stage ratios, collar threshold.
    Cyl(CylArgs),
    /// Stretch maps: Beltrami coefficients, composition and dilatation growth.
    Stretch(StretchArgs),
    /// David budget selection, exponential integrability and the Chebyshev certificate.
    David(DavidArgs),
    /// Step-bound series and the length-distortion contradiction.
    #[command(alias = "series")]
    Bounds(BoundsArgs),
    /// Grid Beltrami solver and the convergence-to-identity experiment.
    Solve(SolveArgs),
    /// Schwarzian derivatives, the exterior Bers norm scan and the derivative kernel.
    Schwarzian(SchwarzianArgs),
    /// L1 domination on annuli.
    Pudding(PuddingArgs),
    /// Every subcommand with its defaults.
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cyl(_) => "cyl",
            Command::Stretch(_) => "stretch",
            Command::David(_) => "david",
            Command::Bounds(_) => "bounds",
            Command::Solve(_) => "solve",
            Command::Schwarzian(_) => "schwarzian",
            Command::Pudding(_) => "pudding",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CylArgs {
    /// Cylinder half-height.
    #[arg(long = "H", default_value_t = 30.0)]
    pub h: f64,
    /// Uniform samples of t in [0, 1].
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    /// Relative bracket of the collar-threshold bisection.
    #[arg(long, default_value_t = 1e-6)]
    pub bisection_tol: f64,
}

impl Default for CylArgs {
    fn default() -> Self {
        Self { h: 30.0, samples: 1001, bisection_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StretchArgs {
    /// Half-heights for the finite-difference coefficient check (comma separated).
    #[arg(long = "H", value_delimiter = ',', default_values_t = vec![1.0, 30.0])]
    pub heights: Vec<f64>,
    /// Band fraction.
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    /// Number of composed stages for the dilatation check.
    #[arg(long = "J", default_value_t = 8)]
    pub stages: usize,
    /// Samples across the cylinder for the finite-difference check.
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

impl Default for StretchArgs {
    fn default() -> Self {
        Self { heights: vec![1.0, 30.0], a: 0.5, stages: 8, samples: 400, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DavidArgs {
    /// Ratio of the geometric budget p_j = ratio^j.
    #[arg(long, default_value_t = 0.25)]
    pub p_ratio: f64,
    /// Ratio of the geometric area sequence area_m = ratio^m.
    #[arg(long, default_value_t = 0.5)]
    pub area_ratio: f64,
    /// Stages j = 0..stages-1.
    #[arg(long, default_value_t = 7)]
    pub stages: usize,
    /// Exponent p of the integrability check and certificate.
    #[arg(long, default_value_t = 2.0)]
    pub exponent: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.5, 1.0])]
    pub eps: Vec<f64>,
}

impl Default for DavidArgs {
    fn default() -> Self {
        Self { p_ratio: 0.25, area_ratio: 0.5, stages: 7, exponent: 2.0, eps: vec![0.05, 0.1, 0.2, 0.5, 1.0] }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    /// Constant of the step estimate; all bounds scale linearly in it.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long = "L0", default_value_t = 0.5)]
    pub l0: f64,
    /// Per-stage radius ratio; defaults to 2 sqrt(2) / 3.
    #[arg(long, conflicts_with = "ratio_default")]
    pub ratio: Option<f64>,
    /// Use the ratio 2 sqrt(2) / 3 explicitly.
    #[arg(long)]
    pub ratio_default: bool,
    /// Truncation index of the series.
    #[arg(long = "J", default_value_t = 500)]
    pub last: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl Default for BoundsArgs {
    fn default() -> Self {
        Self { c: 1.0, l0: 0.5, ratio: None, ratio_default: true, last: 500, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    /// Half-height of the stretch test cylinder.
    #[arg(long = "H", default_value_t = 30.0)]
    pub h: f64,
    /// Cells per side of the stretch test grid.
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// Stages n of the convergence experiment.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 4, 8, 16, 32])]
    pub stages: Vec<usize>,
    /// Cells per side of the convergence experiment.
    #[arg(long, default_value_t = 128)]
    pub experiment_grid: usize,
    /// Sub-samples per cell side for the disk indicator.
    #[arg(long, default_value_t = 16)]
    pub subsamples: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

impl Default for SolveArgs {
    fn default() -> Self {
        Self { h: 30.0, grid: 128, stages: vec![2, 4, 8, 16, 32], experiment_grid: 128, subsamples: 16, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SchwarzianArgs {
    /// Values of lambda for the norm scan.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.3, 0.6, 0.9, 0.99])]
    pub lambda: Vec<f64>,
    /// Radial and angular samples of the exterior grid.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    /// Cells per side of the kernel quadrature.
    #[arg(long, default_value_t = 2048)]
    pub cells: usize,
    /// Sample points of the finite-difference comparison.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

impl Default for SchwarzianArgs {
    fn default() -> Self {
        Self { lambda: vec![0.0, 0.3, 0.6, 0.9, 0.99], grid: 400, cells: 2048, points: 100 }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PuddingArgs {
    #[arg(long, default_value_t = 2.0)]
    pub r1: f64,
    #[arg(long, default_value_t = 3.0)]
    pub r2: f64,
    #[arg(long = "R", default_value_t = 4.0)]
    pub big_r: f64,
    /// Number of random Laurent series.
    #[arg(long, default_value_t = 50)]
    pub random: usize,
    /// Lowest and highest degree of the test series.
    #[arg(long, default_value_t = -5, allow_hyphen_values = true)]
    pub lowest: i32,
    #[arg(long, default_value_t = 5)]
    pub highest: i32,
    /// Relative tolerance of the quadrature refinement for general series.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl Default for PuddingArgs {
    fn default() -> Self {
        Self { r1: 2.0, r2: 3.0, big_r: 4.0, random: 50, lowest: -5, highest: 5, tol: 1e-6 }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive, got {v}");
    }
    Ok(())
}

impl RunConfig {
    /// Reject tolerances that are not positive and grids below 8.
    pub fn validate(&self) -> Result<()> {
        match &self.command {
            Command::Cyl(a) => {
                positive("--bisection-tol", a.bisection_tol)?;
                if a.samples < 2 {
                    bail!("--samples must be at least 2");
                }
            }
            Command::Stretch(a) => {
                positive("--tol", a.tol)?;
                if a.samples < 8 {
                    bail!("--samples must be at least 8");
                }
            }
            Command::David(a) => {
                if a.eps.is_empty() {
                    bail!("--eps needs at least one value");
                }
            }
            Command::Bounds(a) => positive("--tol", a.tol)?,
            Command::Solve(a) => {
                positive("--tol", a.tol)?;
                if a.grid < 8 || a.experiment_grid < 8 {
                    bail!("grid sizes must be at least 8");
                }
            }
            Command::Schwarzian(a) => {
                if a.grid < 8 || a.cells < 8 {
                    bail!("grid sizes must be at least 8");
                }
            }
            Command::Pudding(a) => {
                positive("--tol", a.tol)?;
                if a.lowest > a.highest {
                    bail!("--lowest must not exceed --highest");
                }
            }
            Command::All => {}
        }
        Ok(())
    }
}

/// Run the configured subcommand, write `<subcommand>.json` into the output
/// directory and return the report.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let mut artifacts = Artifacts::new(&config.out_dir)?;
    let checks = dispatch(&config.command, config.seed, &mut artifacts)?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        subcommand: config.command.name().to_string(),
        seed: config.seed,
        config: serde_json::to_value(config)?,
        checks,
        artifacts: artifacts_names(artifacts, config.command.name()),
        timing: Timing { elapsed_ms: start.elapsed().as_secs_f64() * 1e3 },
    };
    std::fs::write(config.out_dir.join(format!("{}.json", report.subcommand)), report.to_json())?;
    Ok(report)
}

fn artifacts_names(artifacts: Artifacts, name: &str) -> Vec<String> {
    let mut names = artifacts.into_names();
    names.push(format!("{name}.json"));
    names
}

fn dispatch(command: &Command, seed: u64, out: &mut Artifacts) -> Result<Vec<Check>> {
    Ok(match command {
        Command::Cyl(a) => commands::cyl(a, out)?,
        Command::Stretch(a) => commands::stretch(a, out)?,
        Command::David(a) => commands::david(a, out)?,
        Command::Bounds(a) => commands::bounds(a, out)?,
        Command::Solve(a) => commands::solve_cmd(a, out)?,
        Command::Schwarzian(a) => commands::schwarzian(a, out)?,
        Command::Pudding(a) => commands::pudding(a, seed, out)?,
        Command::All => {
            let all = [
                Command::Cyl(CylArgs::default()),
                Command::Stretch(StretchArgs::default()),
                Command::David(DavidArgs::default()),
                Command::Bounds(BoundsArgs::default()),
                Command::Solve(SolveArgs::default()),
                Command::Schwarzian(SchwarzianArgs::default()),
                Command::Pudding(PuddingArgs::default()),
            ];
            let mut checks = Vec::new();
            for c in &all {
                for mut check in dispatch(c, seed, out)? {
                    check.name = format!("{}.{}", c.name(), check.name);
                    checks.push(check);
                }
            }
            checks
        }
    })
}
