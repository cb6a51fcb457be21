use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tnep_facts::formulations::{BigMMode, BuildOptions, FormulationKind};

#[derive(Debug, Parser)]
#[command(name = "tnep-facts", version, about = "Transmission expansion planning with FACTS devices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic network (JSON) and hourly series (CSV).
    Generate(GenerateArgs),
    /// Pick the ten extreme-hour scenarios from an hourly series.
    Scenarios(ScenariosArgs),
    /// Build a formulation and write it as MPS plus size statistics.
    Build(BuildArgs),
    /// Solve with the reference engine, or import an external solution.
    Solve(SolveArgs),
    /// Check the disjunction facets, or validate a solution.
    Verify(VerifyArgs),
    /// Build and solve all four formulations side by side.
    Compare(CompareArgs),
    /// Cost and energy breakdown of a solution, plus map CSVs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory. TNEP_FACTS_OUT takes precedence when set.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Use the 123-bus, 255-branch, 292-unit dimensions.
    #[arg(long, conflicts_with_all = ["buses", "branches", "gens", "renewable_fraction"])]
    pub texas: bool,
    #[arg(long, default_value_t = 4)]
    pub buses: usize,
    #[arg(long, default_value_t = 4)]
    pub branches: usize,
    #[arg(long, default_value_t = 4)]
    pub gens: usize,
    #[arg(long, default_value_t = 0.5)]
    pub renewable_fraction: f64,
    #[arg(long, default_value_t = 8760)]
    pub hours: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub load_factor: f64,
    #[arg(long, default_value_t = 1.0)]
    pub wind_factor: f64,
    #[arg(long, default_value_t = 1.0)]
    pub solar_factor: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Where the instance comes from: a catalogued fixture or files.
#[derive(Debug, Args, Serialize)]
pub struct InstanceArgs {
    /// two-bus, congestion-triangle, or random (seeded by --seed).
    #[arg(long, conflicts_with_all = ["network", "scenarios", "series"])]
    pub fixture: Option<String>,
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Scenario list as written by `scenarios`.
    #[arg(long, conflicts_with = "series")]
    pub scenarios: Option<PathBuf>,
    /// Hourly CSV; scenarios are selected from it.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Cost configuration JSON. Defaults to the fixture's costs or the standard rates.
    #[arg(long)]
    pub costs: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelFlags {
    #[arg(long, value_parser = parse_kind, default_value = "facets")]
    pub formulation: FormulationKind,
    #[command(flatten)]
    #[serde(flatten)]
    pub shared: SharedModelFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct SharedModelFlags {
    #[arg(long, default_value = "global")]
    pub bigm: BigMMode,
    #[arg(long)]
    pub tighten_bounds: bool,
    /// Emit the |dpf| <= cap * psi rows in the FACeTS block (default true).
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
    pub emit_eq22: bool,
}

impl InstanceArgs {
    pub fn is_given(&self) -> bool {
        self.fixture.is_some() || self.network.is_some()
    }
}

impl SharedModelFlags {
    pub fn options(&self) -> BuildOptions {
        BuildOptions {
            bigm: self.bigm,
            tighten_bounds: self.tighten_bounds,
            emit_eq22: self.emit_eq22,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Ref,
    External,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverFlags {
    #[arg(long, value_enum, default_value = "ref")]
    pub engine: Engine,
    /// Relative optimality gap for the reference engine.
    #[arg(long, default_value_t = 1e-3)]
    pub gap: f64,
    #[arg(long, default_value_t = 100_000)]
    pub node_limit: usize,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Solution file to import (external engine).
    #[arg(long, required_if_eq("engine", "external"))]
    pub solution: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance to validate `--solution` against; omit to check facets only.
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = -0.6, allow_negative_numbers = true)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    pub theta_max: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub db_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub db_max: f64,
    #[arg(long, default_value_t = 10.0)]
    pub flow_cap: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub model: SharedModelFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Directory holding `<formulation>.sol` files (external engine).
    #[arg(long, required_if_eq("engine", "external"))]
    pub solution: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub solution: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

fn parse_kind(s: &str) -> Result<FormulationKind, String> {
    s.parse::<FormulationKind>().map_err(|e| e.to_string())
}
