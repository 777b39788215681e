mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use kpz_core::KpzError;

use crate::config::{normalize_key, ConfigError, Params};

/// Experiments on the KPZ equation: exact determinants and lattice simulations.
///
/// Parameters come from an optional `key = value` config file and are
/// overridden by flags. Outputs are named `<experiment>-<hash>` after the
/// resolved configuration. Exit status: 0 pass, 1 failed comparison or
/// numerical error, 2 configuration error.
#[derive(Parser)]
#[command(name = "kpz", version)]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "kpz-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tracy-Widom distribution table.
    TwTable(TwTableArgs),
    /// Crossover generating function, distribution and density at KPZ time t.
    Crossover(CrossoverArgs),
    /// Two-point function g(w) of the Airy process.
    TwoPoint(TwoPointArgs),
    /// ASEP height ensemble.
    SimulateAsep(AsepArgs),
    /// Monte Carlo against contour-integral τ-moments.
    TauMoment(TauMomentArgs),
    /// Directed polymer log-partition variance ladder and exponent fit.
    SimulatePolymer(PolymerArgs),
    /// Stochastic heat equation checks.
    SimulateShe(SheArgs),
    /// Samples against a distribution table.
    Compare(CompareArgs),
}

// Flags are parsed as text and validated by `Params`, so config-file values
// and flags go through the same checks.

#[derive(Args)]
#[group(skip)]
struct TwTableArgs {
    /// gue or goe.
    #[arg(long)]
    which: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s_max: Option<String>,
    #[arg(long)]
    ds: Option<String>,
    /// Quadrature nodes per 10 units of domain.
    #[arg(long)]
    n: Option<String>,
    /// Truncated domain length.
    #[arg(long = "L")]
    l: Option<String>,
}

#[derive(Args)]
#[group(skip)]
struct CrossoverArgs {
    #[arg(long)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s_max: Option<String>,
    #[arg(long)]
    ds: Option<String>,
}

#[derive(Args)]
#[group(skip)]
struct TwoPointArgs {
    #[arg(long)]
    w: Option<String>,
}

#[derive(Args)]
#[group(skip)]
struct AsepArgs {
    /// step, flat or stationary.
    #[arg(long)]
    init: Option<String>,
    /// Density of stationary data.
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated sites.
    #[arg(long, allow_hyphen_values = true)]
    sites: Option<String>,
}

#[derive(Args)]
#[group(skip)]
struct TauMomentArgs {
    /// Moment order.
    #[arg(long = "N")]
    n: Option<String>,
    /// Comma-separated increasing sites, one per factor.
    #[arg(long, allow_hyphen_values = true)]
    sites: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
#[group(skip)]
struct PolymerArgs {
    #[arg(long)]
    beta: Option<String>,
    /// gaussian, bernoulli or exponential.
    #[arg(long)]
    dist: Option<String>,
    /// Rate of exponential disorder.
    #[arg(long)]
    rate: Option<String>,
    /// Comma-separated polymer lengths.
    #[arg(long = "N-ladder")]
    n_ladder: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
#[group(skip)]
struct SheArgs {
    /// crossover, moments or brownian.
    #[arg(long)]
    check: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    dx: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// First point of the s-grid (crossover).
    #[arg(long, allow_hyphen_values = true)]
    s_min: Option<String>,
    /// s-grid spacing (crossover).
    #[arg(long)]
    ds: Option<String>,
    /// Number of s-grid points (crossover).
    #[arg(long)]
    points: Option<String>,
    /// Comma-separated times (moments).
    #[arg(long)]
    times: Option<String>,
    /// Brownian drift parameter (brownian).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Comma-separated increment lengths (brownian).
    #[arg(long)]
    xs: Option<String>,
}

#[derive(Args)]
#[group(skip)]
struct CompareArgs {
    /// One sample per line; the first comma-separated column is used.
    #[arg(long)]
    samples: Option<String>,
    /// CSV with columns s,F.
    #[arg(long)]
    table: Option<String>,
    /// KS distance tolerance.
    #[arg(long)]
    tolerance: Option<String>,
}

/// Flags given on the command line, keyed like config entries.
fn command_line_flags(matches: &clap::ArgMatches) -> BTreeMap<String, String> {
    matches
        .ids()
        .map(|id| id.as_str())
        .filter(|id| !matches!(*id, "config" | "out"))
        .filter(|id| matches.value_source(id) == Some(ValueSource::CommandLine))
        .filter_map(|id| {
            let raw: Vec<String> = matches.get_raw(id)?.map(|v| v.to_string_lossy().into_owned()).collect();
            Some((normalize_key(id), raw.join(",")))
        })
        .collect()
}

fn run() -> Result<bool> {
    let matches = Cli::command().get_matches();
    let cli = Cli::from_arg_matches(&matches)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let mut params = Params::new(name, cli.config.as_deref(), command_line_flags(sub))?;
    let out = cli.out.as_path();
    match cli.command {
        Command::TwTable(_) => commands::tw_table(&mut params, out),
        Command::Crossover(_) => commands::crossover(&mut params, out),
        Command::TwoPoint(_) => commands::two_point(&mut params, out),
        Command::SimulateAsep(_) => commands::simulate_asep(&mut params, out),
        Command::TauMoment(_) => commands::tau_moment(&mut params, out),
        Command::SimulatePolymer(_) => commands::simulate_polymer(&mut params, out),
        Command::SimulateShe(_) => commands::simulate_she(&mut params, out),
        Command::Compare(_) => commands::compare(&mut params, out),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<KpzError>() {
        Some(KpzError::InvalidArgument(_) | KpzError::Stability { .. } | KpzError::ContourConstraint(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
