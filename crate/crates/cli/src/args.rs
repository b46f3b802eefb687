use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "quditlab",
    version,
    about = "Simulate and certify multidimensional photonic entanglement",
    after_help = "Set QUDITLAB_THREADS to size the worker pool used by sweeps.\n\
                  Exit codes: 0 success, 1 usage error, 2 numerical failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a Bell functional on a simulated correlation table.
    Bell(BellArgs),
    /// Certify the local dimension from correlations.
    Witness(WitnessArgs),
    /// Evaluate the two-setting steering functional.
    Steering(SteeringArgs),
    /// Certify local randomness from a steering value.
    Randomness(RandomnessArgs),
    /// Reconstruct a two-qudit state from simulated Weyl measurements.
    Tomo(TomoArgs),
    /// Key rates of the BB84-type protocol.
    Qkd(QkdArgs),
    /// Mesh compilation tools.
    Circuit {
        #[command(subcommand)]
        command: CircuitCommand,
    },
    /// Recompute a reference table and compare it with the bundled values.
    Reproduce(ReproduceArgs),
    /// Run one experiment described by a JSON config file.
    Run(RunArgs),
}

#[derive(Debug, Subcommand)]
pub enum CircuitCommand {
    /// Compile a state into interferometer phase settings.
    Compile(CompileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long = "out", alias = "format", value_enum, default_value = "json")]
    pub format: Format,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Coincidences per setting; 0 evaluates exact probabilities.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    /// Noise terms, e.g. `werner:v=0.95,jitter:s=0.02,loss:db=3@1`.
    #[arg(long, default_value = "none")]
    pub noise: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bootstrap resamples for error bars (sampled runs only).
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Inequality {
    Satwap,
    Cglmp,
    Xi,
}

#[derive(Debug, Args)]
pub struct BellArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value = "satwap")]
    pub inequality: Inequality,
    /// Family parameter of the qutrit inequality.
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    /// Schmidt coefficient of |00> + gamma|11> + |22>; defaults to the optimum for xi.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Also write the correlation table as CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    #[value(name = "I")]
    One,
    #[value(name = "II")]
    Two,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long)]
    pub d: usize,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SteeringArgs {
    #[arg(long)]
    pub d: usize,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SdpArgs {
    /// Relative feasibility and gap target of the interior-point solver.
    #[arg(long, default_value_t = 1e-9)]
    pub sdp_tol: f64,
    #[arg(long, default_value_t = 120)]
    pub sdp_max_iter: usize,
}

#[derive(Debug, Args)]
pub struct RandomnessArgs {
    #[arg(long)]
    pub d: usize,
    /// Observed steering value; simulated from the state when omitted.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Setting whose outcome is certified; worst case over both when omitted.
    #[arg(long)]
    pub x_star: Option<usize>,
    /// Allow d above 4.
    #[arg(long)]
    pub large: bool,
    #[command(flatten)]
    pub sdp: SdpArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TomoMethod {
    Cs,
    Linear,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    /// Local dimension; the state lives on d x d.
    #[arg(long)]
    pub d: usize,
    /// Number of sampled Weyl operators; all d^4 when omitted.
    #[arg(long)]
    pub ops: Option<usize>,
    /// Shots per operator; 0 gives exact frequencies.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, value_enum, default_value = "cs")]
    pub method: TomoMethod,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Constant c in epsilon = c sqrt(sum 1/N).
    #[arg(long, default_value_t = 1.0)]
    pub epsilon_c: f64,
    /// White-noise visibility of the prepared |psi+_d>.
    #[arg(long, default_value_t = 1.0)]
    pub visibility: f64,
    /// Route every measurement through a compiled mesh.
    #[arg(long)]
    pub mesh: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    Individual,
    Coherent,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["fidelity", "from_table"]))]
pub struct QkdArgs {
    #[arg(long)]
    pub d: usize,
    /// Probability that Bob's outcome matches Alice's in a shared basis.
    #[arg(long)]
    pub fidelity: Option<f64>,
    /// Correlation table JSON; fidelity is averaged over matched settings.
    #[arg(long)]
    pub from_table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "individual")]
    pub attack: AttackArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Placement {
    Bottom,
    Top,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// State JSON `{dim, re, im}`.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value = "bottom")]
    pub placement: Placement,
    /// Detection mode; half the padded dimension by default.
    #[arg(long)]
    pub k0: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableId {
    Table1,
    Steering,
    Qkd,
    Witness,
    #[value(name = "self-testing")]
    SelfTesting,
    #[value(name = "randomness-1sdi")]
    RandomnessOneSided,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub table: TableId,
    /// Write the comparison report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long = "out", alias = "format", value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}
