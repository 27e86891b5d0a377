//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bipembed",
    version,
    about = "Embed bounded-degree, small-bandwidth bipartite graphs into dense bipartite hosts"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Base seed; every randomized stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Constant schedule: closed forms of the proof, or desk-scale values.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Practical)]
    pub mode: Mode,
    /// Output file for the command's artifact (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (1 gives a fully sequential run).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Faithful,
    Practical,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a host graph (.bg).
    GenHost(GenHostArgs),
    /// Generate a target graph (.bg) and its labelling.
    GenTarget(GenTargetArgs),
    /// Regularity certification and regular partitions.
    #[command(subcommand)]
    Regularity(RegularityCommand),
    /// Find a Hamilton cycle of a balanced bipartite graph.
    Hamilton(HamiltonArgs),
    /// Random balancing assignment of pieces to clusters.
    Balance(BalanceArgs),
    /// Build and check a homomorphism of a target onto the cycle C_{2k}.
    Homomorphism(HomomorphismArgs),
    /// Run the full embedding pipeline.
    Embed(EmbedArgs),
    /// Re-validate a serialized artifact from the graphs alone.
    Verify(VerifyArgs),
    /// Batch of seeded end-to-end runs with aggregate counts.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HostKind {
    RandomMinDegree,
    PlantedBlocks,
}

#[derive(Debug, Args)]
pub struct GenHostArgs {
    #[arg(long, value_enum, default_value_t = HostKind::RandomMinDegree)]
    pub kind: HostKind,
    /// Vertices per side (random hosts).
    #[arg(long)]
    pub n: Option<usize>,
    /// Minimum degree parameter: δ ≥ (1/2 + γ)n.
    #[arg(long, default_value = "0.3")]
    pub gamma: String,
    /// Extra edge probability on top of 1/2 + γ.
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
    /// Number of blocks (planted hosts).
    #[arg(long)]
    pub k: Option<usize>,
    /// Block size (planted hosts).
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    HamiltonCycle,
    Ladder,
    MoebiusLadder,
    Grid,
    RandomLocal,
    PerfectMatching,
}

#[derive(Debug, Args)]
pub struct TargetOpts {
    #[arg(long, value_enum, default_value_t = Family::HamiltonCycle)]
    pub family: Family,
    /// Vertices per side (rungs for ladders).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Bandwidth window of random-local targets.
    #[arg(long, default_value_t = 4)]
    pub window: usize,
    /// Edge probability of random-local targets.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 3)]
    pub max_degree: usize,
}

#[derive(Debug, Args)]
pub struct GenTargetArgs {
    #[command(flatten)]
    pub target: TargetOpts,
    /// Where to write the labelling.
    #[arg(long)]
    pub labelling: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Args)]
pub struct CheckOpts {
    #[arg(long, value_enum, default_value_t = StrategyArg::Sampled)]
    pub strategy: StrategyArg,
    /// Sampled subset pairs.
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
}

#[derive(Debug, Subcommand)]
pub enum RegularityCommand {
    /// Certify one pair (U, W); exit 1 if it is not (super-)regular.
    Check {
        #[arg(long)]
        host: PathBuf,
        /// Comma-separated A-indices (default: all of A).
        #[arg(long)]
        a: Option<String>,
        /// Comma-separated B-indices (default: all of B).
        #[arg(long)]
        b: Option<String>,
        #[arg(long, default_value = "0.25")]
        epsilon: String,
        #[arg(long, default_value = "0.3")]
        d: String,
        /// Also require the minimum-degree condition.
        #[arg(long)]
        super_regular: bool,
        #[command(flatten)]
        check: CheckOpts,
    },
    /// Build a regular equipartition and its reduced graph.
    Partition {
        #[arg(long)]
        host: PathBuf,
        #[arg(long, default_value = "0.25")]
        epsilon: String,
        #[arg(long, default_value = "0.3")]
        d: String,
        #[arg(long, default_value_t = 8)]
        k0: usize,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[command(flatten)]
        check: CheckOpts,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HamiltonModeArg {
    Auto,
    RotationExtension,
    ExhaustiveSmall,
}

#[derive(Debug, Args)]
pub struct HamiltonArgs {
    #[arg(long)]
    pub host: PathBuf,
    #[arg(long, value_enum, default_value_t = HamiltonModeArg::Auto)]
    pub search: HamiltonModeArg,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    /// Cluster sizes n_i: `<size>x<count>` or a comma-separated list.
    #[arg(long)]
    pub ni: String,
    /// Piece file with `<A-count> <B-count>` lines.
    #[arg(long)]
    pub pieces: PathBuf,
    #[arg(long, default_value = "0.05")]
    pub xi: String,
    #[arg(long, default_value_t = 50)]
    pub retries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Full,
    Used,
}

#[derive(Debug, Args)]
pub struct HomomorphismArgs {
    #[arg(long)]
    pub target: PathBuf,
    /// Labelling file (default: Cuthill–McKee).
    #[arg(long)]
    pub labelling: Option<PathBuf>,
    /// Cluster sizes n_i; k is their number.
    #[arg(long)]
    pub ni: String,
    #[arg(long)]
    pub ell: usize,
    /// Bandwidth bound (default: the labelling's bandwidth).
    #[arg(long)]
    pub beta_n: Option<usize>,
    #[arg(long, default_value = "0.1")]
    pub xi: String,
    #[arg(long, default_value_t = 50)]
    pub retries: usize,
    #[arg(long, value_enum, default_value_t = PolicyArg::Used)]
    pub policy: PolicyArg,
}

#[derive(Debug, Args)]
pub struct PipelineOpts {
    #[arg(long, default_value = "0.3")]
    pub gamma: String,
    #[arg(long, default_value = "0.25")]
    pub epsilon: String,
    #[arg(long, default_value_t = 8)]
    pub k0: usize,
    /// Largest cluster count (default: k0).
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Number of pieces (practical mode lowers it to the feasible maximum).
    #[arg(long)]
    pub ell: Option<usize>,
    /// Balancing tolerance.
    #[arg(long)]
    pub xi: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub embed_retries: usize,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub host: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// Labelling file for the target (default: Cuthill–McKee).
    #[arg(long)]
    pub labelling: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineOpts,
    /// Where to write the full stage-by-stage report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub host: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Embedding JSON (needs --host and --target).
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Hamilton cycle JSON (needs --host).
    #[arg(long)]
    pub cycle: Option<PathBuf>,
    /// Cycle homomorphism JSON (needs --target).
    #[arg(long)]
    pub homomorphism: Option<PathBuf>,
    /// Cluster sizes for the preimage clauses of a homomorphism.
    #[arg(long)]
    pub ni: Option<String>,
    #[arg(long, default_value = "0.1")]
    pub xi: String,
    /// Cluster partition JSON (needs --host).
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Labelling file (needs --target).
    #[arg(long)]
    pub labelling: Option<PathBuf>,
    /// Claimed bandwidth of the labelling.
    #[arg(long)]
    pub bandwidth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Vertices per side.
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 20)]
    pub runs: u64,
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
    #[arg(long, value_enum, default_value_t = Family::HamiltonCycle)]
    pub family: Family,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub window: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 3)]
    pub max_degree: usize,
    #[command(flatten)]
    pub pipeline: PipelineOpts,
}
