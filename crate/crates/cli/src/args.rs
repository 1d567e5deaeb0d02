use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Train, evaluate and inspect policies that disentangle multiqubit states
/// using two-qubit reduced-state observations.
#[derive(Debug, Parser)]
#[command(name = "disentangle", version)]
pub struct Cli {
    /// Worker threads for rollouts and evaluation. Results do not depend on it.
    #[arg(long, global = true, env = "DISENTANGLE_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy, then evaluate it greedily.
    Train(TrainArgs),
    /// Evaluate a checkpoint on fresh states.
    Eval(EvalArgs),
    /// Record one episode step by step as JSON lines.
    Trace(TraceArgs),
    /// Train and evaluate one run per PQC setting.
    Sweep(SweepArgs),
    /// Print the default configuration file.
    ConfigTemplate,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite a previous run in the output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// The checkpoint must match this configuration's policy; its env and
    /// eval sections apply.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated patterns, e.g. `RRRRRR,RR-RR-RR`.
    #[arg(long, value_delimiter = ',')]
    pub patterns: Vec<String>,
    #[arg(long)]
    pub n_states: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable the repeated-pair refinement.
    #[arg(long)]
    pub no_refinement: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    /// Policy used to choose actions; not needed with `--actions`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pattern: Option<String>,
    /// Initial statevector as JSON (`{"num_qubits": n, "amplitudes": [[re, im], ...]}`);
    /// replaces pattern sampling.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scripted pairs (`0-1,1-2`) or action indices (`0,3`) replayed instead
    /// of querying a policy.
    #[arg(long, value_delimiter = ',')]
    pub actions: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    #[value(name = "pqc.qubits")]
    PqcQubits,
    #[value(name = "pqc.layers")]
    PqcLayers,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Swept setting; the other one stays at its configured value.
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    pub axis: Option<SweepAxis>,
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<usize>,
    /// Full grid: classical head, then the hybrid head for every
    /// `--qubits` × `--layers` combination.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5])]
    pub qubits: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4])]
    pub layers: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}
