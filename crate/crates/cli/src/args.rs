use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gomea",
    version,
    about = "GOMEA with partial evaluations and parallel GOM for Max-Cut"
)]
pub struct Cli {
    /// Seed for every random choice (instance generation and optimization).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize an instance and write a convergence trace.
    Run(RunArgs),
    /// Write a generated instance in edge-list format.
    Generate(GenerateArgs),
    /// Report how linkage sets split into independent groups.
    ColorStats(ColorStatsArgs),
    /// Solve a small instance exactly by enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct InstanceSource {
    /// Edge-list instance file.
    #[arg(required_unless_present = "generate", conflicts_with = "generate")]
    pub instance: Option<PathBuf>,

    /// Generate the instance instead: `complete:N` or `torus:WxH`.
    #[arg(long, value_name = "SPEC")]
    pub generate: Option<String>,

    /// Weights for --generate: `unit` or `uniform:LO:HI`.
    #[arg(long, default_value = "unit", requires = "generate")]
    pub weights: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Serial,
    Parallel,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: InstanceSource,

    /// TOML file with defaults for any option below.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub engine: Option<Engine>,

    /// `learned-lt`, `learned-lt:B`, `flt`, `bflt:B` or `univariate`.
    #[arg(long)]
    pub model: Option<String>,

    /// Budget in partial-evaluation equivalents.
    #[arg(long)]
    pub max_evaluations: Option<f64>,

    #[arg(long)]
    pub max_seconds: Option<f64>,

    /// Stop when this fitness is reached; exit code 3 if it never is.
    #[arg(long, conflicts_with = "stop_on_optimum")]
    pub target_fitness: Option<String>,

    /// Known optimum value; same as --target-fitness.
    #[arg(long, value_name = "VALUE")]
    pub stop_on_optimum: Option<String>,

    /// Single population of this size instead of the interleaved scheme.
    #[arg(long, conflicts_with_all = ["ims_n_base", "ims_c", "ims_max_populations"])]
    pub population_size: Option<usize>,

    #[arg(long)]
    pub ims_n_base: Option<usize>,

    /// Generations of population i per generation of population i+1.
    #[arg(long)]
    pub ims_c: Option<u64>,

    #[arg(long)]
    pub ims_max_populations: Option<usize>,

    #[arg(long)]
    pub workers: Option<usize>,

    /// Trace output path (CSV).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,

    /// Seconds between heartbeat trace rows; 0 disables them.
    #[arg(long)]
    pub heartbeat: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// `complete` or `torus`.
    pub kind: String,

    /// Vertex count for complete graphs, `WxH` for tori.
    pub size: String,

    /// `unit` or `uniform:LO:HI`.
    #[arg(long, default_value = "unit")]
    pub weights: String,

    /// Output path; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ColorStatsArgs {
    #[command(flatten)]
    pub source: InstanceSource,

    /// `flt`, `bflt:B` or `univariate`.
    #[arg(long, default_value = "flt", conflicts_with = "fos")]
    pub model: String,

    /// Linkage sets from a file: one set per line, 0-based variable indices.
    #[arg(long, value_name = "PATH")]
    pub fos: Option<PathBuf>,

    /// Also list the members of every group.
    #[arg(long)]
    pub groups: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: InstanceSource,
}
