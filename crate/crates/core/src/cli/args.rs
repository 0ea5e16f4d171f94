//! Command-line grammar.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::charfun::Variant;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TRANSPORT_SPECTRA_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "transport-spectra",
    version,
    about = "Spectra, robustness margins and simulations of boundary-controlled transport loops"
)]
pub struct Cli {
    /// Output directory [default: $TRANSPORT_SPECTRA_OUT or .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<String>,
    /// Stem of the output file names [default: depends on the command]
    #[arg(long, global = true)]
    pub name: Option<String>,
    /// Worker threads for the root finder and sweeps [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zeros of a characteristic function inside a window
    Spectrum(SpectrumArgs),
    /// Spectral-abscissa checks over a parameter grid
    Sweep(SweepArgs),
    /// Delay-robustness margin of a boundary coupling matrix
    Margin(MarginArgs),
    /// Time-domain closed-loop simulation with a decay-rate fit
    Simulate(SimulateArgs),
    /// Re-run the command recorded in a manifest
    Replay(ReplayArgs),
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct PlantArgs {
    /// Viscosity eta (0 selects pure transport)
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Relative velocity perturbation epsilon
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eps: f64,
    /// Nominal velocity (the delay is 1/velocity)
    #[arg(long, default_value_t = 1.0)]
    pub velocity: f64,
    /// Nominal delay, an alternative to --velocity
    #[arg(long, conflicts_with = "velocity")]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub k1: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub k2: f64,
    /// Proportional gain
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kp: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SearchArgs {
    /// Search rectangle re_min,re_max,im_min,im_max [default: depends on the model]
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Bisection depth limit on the boundary
    #[arg(long, default_value_t = crate::roots::SearchWindow::DEFAULT_DEPTH)]
    pub depth: u32,
    /// Newton step tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[command(flatten)]
    pub plant: PlantArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Theorem1,
    Conjecture1,
    Theorem2,
    Conjecture3,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub check: CheckKind,
    /// Viscosities: comma list or start:stop:step
    #[arg(long, default_value = "0.02,0.05,0.1,0.2")]
    pub etas: String,
    /// Viscosity of the perturbed sweep
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    /// Velocity perturbations: comma list or start:stop:step
    #[arg(long, default_value = "-0.05,-0.02,0,0.02,0.05", allow_hyphen_values = true)]
    pub eps: String,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_DELTA)]
    pub delta: f64,
    /// Lower half-width of the optimality band
    #[arg(long, default_value_t = 0.2)]
    pub below: f64,
    /// The probe asks for sigma > -eps_bound
    #[arg(long, default_value_t = 0.15)]
    pub eps_bound: f64,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct MarginArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub k1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k2: Option<f64>,
    /// identityN, simpler, or rows such as "a,b;c,d"
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["k1", "k2"])]
    pub matrix: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemArg {
    InviscidPair,
    ViscousPair,
    SimplerPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerArg {
    None,
    Proportional,
    Dynamic,
    Deadbeat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialArg {
    Bump,
    Smooth,
    Constant,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub system: SystemArg,
    /// Feedback law [default: deadbeat, none for simpler-pair]
    #[arg(long, value_enum)]
    pub controller: Option<ControllerArg>,
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Number of cells per subsystem
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub cfl: f64,
    #[arg(long, default_value_t = 30.0)]
    pub t_end: f64,
    /// Start of the decay-rate fit
    #[arg(long, default_value_t = 8.0)]
    pub t_skip: f64,
    #[arg(long, value_enum, default_value_t = InitialArg::Bump)]
    pub initial: InitialArg,
    /// Seed of the smooth random initial data
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of modes of the smooth random initial data
    #[arg(long, default_value_t = 6)]
    pub modes: usize,
    /// Value of the constant initial data
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub value: f64,
    /// Write a state snapshot every this many steps (0: none)
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
    /// Skip the spectral comparison
    #[arg(long)]
    pub no_spectral: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    pub manifest: String,
}
