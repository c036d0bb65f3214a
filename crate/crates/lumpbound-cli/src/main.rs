//! `lumpbound` command-line entry point.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use lumpbound::correlations::Correlation;
use lumpbound::mesh::Shape;
use lumpbound::profiles::EtaKind;

pub const OUT_ENV: &str = "LUMPBOUND_OUT";
const DEFAULT_OUT: &str = "lumpbound-out";

#[derive(Parser, Debug)]
#[command(name = "lumpbound", version, about = "Lumped capacitance error bounds and Nusselt correlation tools")]
pub struct Cli {
    /// Flat `key = value` file; command-line flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $LUMPBOUND_OUT, then ./lumpbound-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Solve for phi and its computable upper bound on one or more levels.
    Phi(PhiArgs),
    /// Assemble the lumped-model error budget from given numbers.
    Bounds(BoundsArgs),
    /// Transient Robin heat equation compared with the lumped model.
    Rhe(RheArgs),
    /// Lumped model curve, time constant and time-scale ratio.
    Lcm(LcmArgs),
    /// Learn length-scale ratios q from Nusselt samples.
    LearnQ(LearnArgs),
    /// PCA spheroid fit of a 3D point cloud.
    FitShape(FitArgs),
    /// Steady-state detection on a Nusselt series and boundary profile statistics.
    SteadyState(SteadyArgs),
    /// Evaluate an empirical Nusselt correlation.
    Correlate(CorrelateArgs),
    /// Regenerate the geometry and phi tables with reference errors.
    Tables(TablesArgs),
}

pub const SUBCOMMANDS: [&str; 9] =
    ["phi", "bounds", "rhe", "lcm", "learn-q", "fit-shape", "steady-state", "correlate", "tables"];

fn parse_shape(s: &str) -> Result<Shape, String> {
    s.parse().map_err(|e: lumpbound::Error| e.to_string())
}

fn parse_eta(s: &str) -> Result<EtaKind, String> {
    s.parse().map_err(|e: lumpbound::Error| e.to_string())
}

fn parse_correlation(s: &str) -> Result<Correlation, String> {
    s.parse().map_err(|e: lumpbound::Error| e.to_string())
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Solver {
    Direct,
    Cg,
}

impl From<Solver> for lumpbound::linalg::SolverKind {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Direct => lumpbound::linalg::SolverKind::Direct,
            Solver::Cg => lumpbound::linalg::SolverKind::ProjectedCg,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Mass {
    Lumped,
    Consistent,
}

/// Domain and coefficients shared by the PDE subcommands.
#[derive(Args, Debug)]
pub struct DomainArgs {
    /// Canonical shape: disk, square, triangle, cross.
    #[arg(long, default_value = "disk", value_parser = parse_shape)]
    pub shape: Shape,
    /// Mesh file; replaces --shape. Levels above 1 refine it uniformly.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Boundary profile: constant, linear, sinusoidal, sinusoidal_pi, step.
    #[arg(long, default_value = "constant", value_parser = parse_eta)]
    pub eta: EtaKind,
    /// Coefficient file (region/boundary/eta_nodal lines); replaces --eta.
    #[arg(long)]
    pub fields: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "direct")]
    pub solver: Solver,
}

#[derive(Args, Debug)]
pub struct PhiArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Refinement levels, comma separated (level 1 is the base mesh).
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub levels: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Biot number B.
    #[arg(long = "B")]
    pub b: f64,
    /// Estimated Biot number (defaults to B).
    #[arg(long = "B-est")]
    pub b_est: Option<f64>,
    /// Geometric factor |boundary| / |domain|.
    #[arg(long)]
    pub gamma: f64,
    /// phi itself; otherwise the upper bound is built from the next flags.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub phi111: Option<f64>,
    #[arg(long = "gamma-over-lambda")]
    pub gamma_over_lambda: Option<f64>,
    #[arg(long = "gamma-sq-over-mu", default_value_t = 0.0)]
    pub gamma_sq_over_mu: f64,
    #[arg(long = "var-eta", default_value_t = 0.0)]
    pub var_eta: f64,
    #[arg(long = "var-sigma", default_value_t = 0.0)]
    pub var_sigma: f64,
    /// Domain measure for the temporal term.
    #[arg(long)]
    pub area: Option<f64>,
    /// L1-in-time, L1-on-boundary distance between eta and its average.
    #[arg(long)]
    pub l1l1: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RheArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value_t = 5)]
    pub level: usize,
    /// Biot number B.
    #[arg(long = "B", conflicts_with = "b_over_gamma")]
    pub b: Option<f64>,
    /// Biot number as a fraction of gamma.
    #[arg(long = "B-over-gamma")]
    pub b_over_gamma: Option<f64>,
    /// Final time (default 3 / (B gamma)).
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "lumped")]
    pub mass: Mass,
    /// Stored snapshot count for the variation statistics.
    #[arg(long, default_value_t = 200)]
    pub snapshots: usize,
    /// Number of eigenpairs for a spectral comparison (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub modes: usize,
    /// Period of a boundary oscillation 1 + a sin(2 pi t / eps) (0: none).
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
}

#[derive(Args, Debug)]
pub struct LcmArgs {
    #[arg(long = "B")]
    pub b: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Final time (default 5 tau).
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    #[arg(long)]
    pub volume: Option<f64>,
    #[arg(long)]
    pub area: Option<f64>,
    #[arg(long = "rho-c")]
    pub rho_c: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long = "T-inf")]
    pub t_inf: Option<f64>,
    #[arg(long = "T-init")]
    pub t_init: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long = "Re")]
    pub re: Option<f64>,
    #[arg(long = "Pr")]
    pub pr: Option<f64>,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    /// CSV `geometry_id,s,theta_deg,Re,Nu,Pr`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "ranz_marshall", value_parser = parse_correlation)]
    pub correlation: Correlation,
    /// Evaluate the surrogate at `s,theta_deg`.
    #[arg(long, value_delimiter = ',')]
    pub query: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV of `x,y,z` points.
    #[arg(long, conflicts_with_all = ["spheroid", "cuboid"])]
    pub input: Option<PathBuf>,
    /// Synthetic spheroid surface `polar,equatorial,theta_deg`.
    #[arg(long, value_delimiter = ',', conflicts_with = "cuboid")]
    pub spheroid: Option<Vec<f64>>,
    /// Synthetic cuboid surface `lx,ly,lz`.
    #[arg(long, value_delimiter = ',')]
    pub cuboid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SteadyArgs {
    /// CSV `t,nu`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Boundary profile CSV `coord,eta`, optionally headed `periodic=true period=<p>`.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Shedding period; otherwise estimated from the next flags.
    #[arg(long = "t-vs")]
    pub t_vs: Option<f64>,
    #[arg(long, default_value_t = lumpbound::nusselt::DEFAULT_STROUHAL)]
    pub strouhal: f64,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long = "Re")]
    pub re: Option<f64>,
    #[arg(long = "Pr")]
    pub pr: Option<f64>,
    #[arg(long = "initial-width", default_value_t = 5.0)]
    pub initial_width: f64,
    #[arg(long = "window-step", default_value_t = 0.5)]
    pub window_step: f64,
    #[arg(long, default_value_t = 0.05)]
    pub growth: f64,
    #[arg(long, default_value_t = 7.5)]
    pub activation: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 5)]
    pub history: usize,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[arg(long, value_parser = parse_correlation)]
    pub name: Correlation,
    #[arg(long = "Re")]
    pub re: f64,
    #[arg(long = "Pr")]
    pub pr: f64,
    /// Fail outside the validity range instead of flagging it.
    #[arg(long)]
    pub strict: bool,
    /// Length-scale ratio: evaluate the correlation written in q D with D-based numbers.
    #[arg(long)]
    pub q: Option<f64>,
    /// Conductivity ratio; reports B = r2 Nu.
    #[arg(long)]
    pub r2: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    /// One level for every shape (default: per-shape levels).
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long, value_enum, default_value = "direct")]
    pub solver: Solver,
}

/// Failure categories with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<lumpbound::Error> for CliError {
    fn from(e: lumpbound::Error) -> Self {
        use lumpbound::Error as E;
        match e {
            E::InvalidInput(_) | E::Parse { .. } => CliError::Config(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

fn command() -> clap::Command {
    Cli::command().mut_subcommands(|c| c.args_override_self(true))
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let resolved = config::resolve(argv.clone(), &SUBCOMMANDS).map_err(CliError::Config)?;
    let cmd = command();
    let matches = match cmd.clone().try_get_matches_from(&resolved.args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(CliError::Config("invalid arguments".into())) } else { Ok(()) };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Config(e.to_string()))?;
    let out = cli
        .out
        .clone()
        .or(resolved.config_out.clone().map(PathBuf::from))
        .or(std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let manifest = config::manifest(&cmd, name, sub, &argv, &resolved.config_keys, resolved.config_path.as_ref(), &out);
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    commands::write(&out, "manifest.txt", &manifest)?;
    let report = commands::dispatch(&cli.command, &out)?;
    print!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lumpbound: {e}");
            ExitCode::from(e.code())
        }
    }
}
