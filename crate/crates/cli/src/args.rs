//! Command-line surface. Every experiment flag is optional so that values can
//! come from `--config`; flags that were given serialize over the config.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(name = "causim", version, about = "Causal-model quantum experiments and locality analysis")]
pub struct Cli {
    /// TOML experiment config; its `[experiment]` table supplies defaults for
    /// the subcommand's flags and its top-level `seed` the default seed.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for the JSON and CSV results.
    #[arg(long, global = true, value_name = "DIR", env = "CAUSIM_OUT", default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entangled pairs measured by two Stern-Gerlach apparatuses.
    Bell(BellArgs),
    /// Single electrons through two slits, optionally marked.
    Doubleslit(DoubleSlitArgs),
    /// One-dimensional wave equation as a cellular automaton.
    Wave(WaveArgs),
    /// Two coupled pendulums integrated with local forces.
    Pendulum(PendulumArgs),
    /// Classify a model description by locality.
    Analyze(AnalyzeArgs),
    /// Enumerate deterministic local strategies for the three-setting test.
    Lhv(LhvArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bell(_) => "bell",
            Command::Doubleslit(_) => "doubleslit",
            Command::Wave(_) => "wave",
            Command::Pendulum(_) => "pendulum",
            Command::Analyze(_) => "analyze",
            Command::Lhv(_) => "lhv",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeArg {
    #[default]
    Centralized,
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerArg {
    RoundRobin,
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormArg {
    Identical,
    Anticorrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl Serialize for OnOff {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_bool(*self == OnOff::On)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Gaussian,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    Periodic,
    FixedZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    InPhase,
    AntiPhase,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BellArgs {
    /// Apparatus angle of wing a, degrees.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_a: Option<f64>,
    /// Apparatus angle of wing b, degrees.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_b: Option<f64>,
    /// Three settings a,b,c: runs the (a,b), (a,c), (b,c) scan instead.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, value_name = "A,B,C")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime: Option<RuntimeArg>,
    /// Grant order of the refined runtime.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerArg>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<FormArg>,
    /// Emit every pair with this spin direction instead of a uniform one.
    #[arg(long, allow_hyphen_values = true, value_name = "DEGREES")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_spindir: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DoubleSlitArgs {
    /// Which-path marker behind the lower slit.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marker: Option<OnOff>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime: Option<RuntimeArg>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerArg>,
    /// Moving-average width used for the visibility estimate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WaveArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// v·Δt/Δx, at most 1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub courant: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitArg>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryArg>,
    /// Keep every n-th grid in the CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PendulumArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,
    /// Spring constant of the coupling.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Natural frequency of each pendulum alone.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Simulated duration, in periods of the excited mode.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Model description file, or the name of a bundled one
    /// (wave-ca, pendulum, central-qt, refined-qt).
    pub path: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LhvArgs {
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, value_name = "A,B,C")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<FormArg>,
}
