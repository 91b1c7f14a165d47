use std::path::PathBuf;

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mable::select::DEFAULT_GRID_COUNT;
use mable::transform::DEFAULT_MARGIN;
use mable::{FitConfig, GridPolicy, GridStart};

#[derive(Debug, Parser)]
#[command(name = "mable", version, about = "Bernstein polynomial density estimation on box supports")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to CSV data.
    Fit(FitArgs),
    /// Select per-dimension degrees without fitting the joint model.
    Select(SelectArgs),
    /// Evaluate a model's density or CDF on a grid or at given points.
    Eval(EvalArgs),
    /// Draw a sample from a model.
    Sample(SampleArgs),
    /// Run a Monte Carlo study on a built-in target.
    Simulate(SimulateArgs),
}

/// `auto[:margin]` or `a1,b1,...,ad,bd`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoxSpec {
    Auto { margin: f64 },
    Explicit { lower: Vec<f64>, upper: Vec<f64> },
}

pub fn parse_box(s: &str) -> Result<BoxSpec, String> {
    if let Some(rest) = s.strip_prefix("auto") {
        let margin = match rest.strip_prefix(':') {
            Some(m) => m.parse::<f64>().map_err(|e| format!("bad margin {m:?}: {e}"))?,
            None if rest.is_empty() => DEFAULT_MARGIN,
            None => return Err(format!("expected auto or auto:<margin>, got {s:?}")),
        };
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(format!("margin must be a nonnegative number, got {margin}"));
        }
        return Ok(BoxSpec::Auto { margin });
    }
    let bounds = parse_list::<f64>(s)?;
    if bounds.len() % 2 != 0 {
        return Err(format!(
            "box needs a lower and an upper bound per dimension, got {} values",
            bounds.len()
        ));
    }
    let (lower, upper) = bounds.chunks(2).map(|c| (c[0], c[1])).unzip();
    Ok(BoxSpec::Explicit { lower, upper })
}

/// `auto` or `m1,...,md`.
#[derive(Debug, Clone, PartialEq)]
pub enum DegreeSpec {
    Auto,
    Explicit(Vec<usize>),
}

pub fn parse_degrees(s: &str) -> Result<DegreeSpec, String> {
    if s == "auto" {
        Ok(DegreeSpec::Auto)
    } else {
        parse_list::<usize>(s).map(DegreeSpec::Explicit)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|e| format!("bad value {v:?}: {e}"))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV, one observation per row.
    #[arg(long, short)]
    pub input: PathBuf,

    /// The first CSV row holds column names.
    #[arg(long)]
    pub header: bool,

    /// Support box: `auto[:margin]` or `a1,b1,...,ad,bd`.
    #[arg(long = "box", value_parser = parse_box, default_value = "auto")]
    pub support: BoxSpec,

    /// Drop rows outside an explicit box instead of failing.
    #[arg(long)]
    pub truncate: bool,
}

#[derive(Debug, Args)]
pub struct FitOptions {
    /// Relative log-likelihood tolerance of EM [default: 1e-7].
    #[arg(long)]
    pub tol: Option<f64>,

    /// EM iteration cap [default: 50000].
    #[arg(long)]
    pub max_iters: Option<usize>,

    /// Clamp transformed data into [eps, 1 - eps] [default: 1e-10].
    #[arg(long)]
    pub boundary_eps: Option<f64>,

    /// Candidates above the moment bound in automatic grids.
    #[arg(long, default_value_t = DEFAULT_GRID_COUNT, value_parser = clap::value_parser!(u32).range(2..).map(|v| v as usize))]
    pub grid_count: usize,

    /// First candidate of automatic grids: degree 1 or the moment bound.
    #[arg(long, value_enum, default_value_t = GridStartArg::One)]
    pub grid_start: GridStartArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridStartArg {
    One,
    Bound,
}

impl FitOptions {
    pub fn grids(&self) -> GridPolicy {
        GridPolicy::Auto {
            start: match self.grid_start {
                GridStartArg::One => GridStart::One,
                GridStartArg::Bound => GridStart::Bound,
            },
            count: self.grid_count,
        }
    }

    pub fn config(&self) -> FitConfig {
        let defaults = FitConfig::default();
        FitConfig {
            tol: self.tol.unwrap_or(defaults.tol),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            boundary_eps: self.boundary_eps.unwrap_or(defaults.boundary_eps),
            ..defaults
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// `auto` or one degree per dimension, e.g. `12,8`.
    #[arg(long, value_parser = parse_degrees, default_value = "auto")]
    pub degrees: DegreeSpec,

    #[command(flatten)]
    pub fit: FitOptions,

    /// Model JSON.
    #[arg(long, short)]
    pub output: PathBuf,

    /// EM report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Degree-selection JSON (automatic degrees only).
    #[arg(long)]
    pub selection: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub fit: FitOptions,

    /// Selection JSON (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Density,
    Cdf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("at").required(true).args(["grid", "points"])))]
pub struct EvalArgs {
    /// Model JSON.
    #[arg(long, short)]
    pub model: PathBuf,

    /// Grid points per axis, endpoints included.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=2048).map(|v| v as usize))]
    pub grid: Option<usize>,

    /// CSV of evaluation points.
    #[arg(long)]
    pub points: Option<PathBuf>,

    /// The points CSV has a header row.
    #[arg(long, requires = "points")]
    pub header: bool,

    /// Quantity to evaluate.
    #[arg(long, value_enum, default_value_t = Quantity::Density)]
    pub what: Quantity,

    /// Output CSV (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Model JSON.
    #[arg(long, short)]
    pub model: PathBuf,

    /// Number of draws.
    #[arg(short, long = "n")]
    pub n: usize,

    /// Output CSV (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetName {
    /// Beta(7, 7) x Beta(5, 5).
    Beta,
    /// Correlated normal truncated to the square.
    Normal,
    /// Two-component normal mixture truncated to the square.
    Mn,
    /// (9/2)(x^8 + y^8).
    P88,
}

impl TargetName {
    pub fn key(self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Normal => "normal",
            Self::Mn => "mn",
            Self::P88 => "p88",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in target distribution on the unit square.
    #[arg(long, value_enum)]
    pub target: TargetName,

    /// Sample size per run.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..).map(|v| v as usize))]
    pub n: usize,

    /// Number of Monte Carlo runs.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub runs: usize,

    /// `auto` or fixed degrees for every run.
    #[arg(long, value_parser = parse_degrees, default_value = "auto")]
    pub degrees: DegreeSpec,

    #[command(flatten)]
    pub fit: FitOptions,

    /// Study JSON.
    #[arg(long, short)]
    pub output: PathBuf,

    /// Text table (default: stdout).
    #[arg(long)]
    pub table: Option<PathBuf>,
}
