use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mrmul::matmul::{PartitionSchema, ShardKind};

mod args;
mod commands;

#[derive(Debug, Parser)]
#[command(name = "mrmul", version, about = "Partitioned matrix multiplication and the solvers built on it")]
struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Worker threads per job. Defaults to the available parallelism.
    #[arg(long, value_parser = args::workers)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl Common {
    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random sparse matrix in row format.
    Generate(GenerateArgs),
    /// Multiply two row-format matrices with the partition-summation jobs.
    Multiply(MultiplyArgs),
    /// Nonnegative factorization A ≈ WH by multiplicative updates.
    Nmf(NmfArgs),
    /// Train a linear fixed-bias SVM by projected gradient ascent.
    SvmTrain(SvmTrainArgs),
    /// Score labeled queries against a trained SVM.
    SvmPredict(SvmPredictArgs),
    /// Rank nodes of an edge list by damped power iteration.
    Pagerank(PagerankArgs),
    /// Run a multiplication grid and fit scaling curves.
    BenchScaling(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Rows.
    #[arg(long, alias = "rows")]
    pub m: usize,
    /// Columns.
    #[arg(long, alias = "cols")]
    pub n: usize,
    /// Fraction of nonzero cells; accepts `2^-7`.
    #[arg(long, value_parser = args::density)]
    pub delta: f64,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MultiplyArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// `MxNxK` block counts. Chosen from the operand shapes when omitted.
    #[arg(long, value_parser = args::schema)]
    pub schema: Option<PartitionSchema>,
    #[arg(long, value_parser = args::shard, default_value = "naive")]
    pub shard: ShardKind,
    #[command(flatten)]
    pub common: Common,
    /// Product file.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-stage metrics CSV. Defaults to `<out>.metrics.csv`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NmfArgs {
    #[arg(long)]
    pub a: PathBuf,
    /// Inner rank.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Upper bound on blocks per split dimension. Fixed independently of
    /// `--workers` so results do not depend on the worker count.
    #[arg(long, default_value_t = 4, value_parser = args::workers)]
    pub parts: usize,
    #[arg(long, value_parser = args::shard, default_value = "naive")]
    pub shard: ShardKind,
    #[arg(long, value_parser = args::real, default_value = "1e-12")]
    pub eps: f64,
    #[command(flatten)]
    pub common: Common,
    /// Output prefix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SvmTrainArgs {
    /// Labeled examples, `<label> <index>:<value> ...` per line.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = args::real, default_value = "1")]
    pub c: f64,
    #[arg(long, value_parser = args::real, default_value = "0.001")]
    pub eta: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[command(flatten)]
    pub common: Common,
    /// Output prefix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SvmPredictArgs {
    /// Training examples the model was fitted on.
    #[arg(long)]
    pub train: PathBuf,
    /// `index,value` multipliers written by svm-train.
    #[arg(long)]
    pub alpha: PathBuf,
    /// Labeled queries.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub common: Common,
    /// Scores file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PagerankArgs {
    /// `src<TAB>dst` lines, 0-based ids.
    #[arg(long)]
    pub edges: PathBuf,
    /// Node count. Defaults to the largest id plus one.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, value_parser = args::real, default_value = "0.85")]
    pub damping: f64,
    #[arg(long, value_parser = args::real, default_value = "1e-8")]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[command(flatten)]
    pub common: Common,
    /// Output prefix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Square operand sizes, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048,4096")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = args::density, default_value = "2^-7")]
    pub deltas: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = args::schema, default_value = "4x2x4")]
    pub schemas: Vec<PartitionSchema>,
    #[arg(long, value_delimiter = ',', value_parser = args::shard, default_value = "naive")]
    pub shards: Vec<ShardKind>,
    /// Worker counts to sweep.
    #[arg(long, value_delimiter = ',', value_parser = args::workers, default_value = "1")]
    pub workers: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for `scaling.csv` and `summary.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let argv = match args::merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("mrmul: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Multiply(a) => commands::multiply(&a),
        Command::Nmf(a) => commands::nmf(&a),
        Command::SvmTrain(a) => commands::svm_train(&a),
        Command::SvmPredict(a) => commands::svm_predict(&a),
        Command::Pagerank(a) => commands::pagerank(&a),
        Command::BenchScaling(a) => commands::bench_scaling(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mrmul: {e:#}");
            ExitCode::FAILURE
        }
    }
}
