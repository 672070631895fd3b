mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Spectral noise of random walks in random environments on high-girth graphs.
#[derive(Debug, Parser, Serialize)]
#[command(name = "girthlab", version)]
pub struct Cli {
    /// Master seed. For `mc` it overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for the parallel parts.
    #[arg(long, global = true, env = "GIRTHLAB_THREADS")]
    pub threads: Option<usize>,

    /// Write the main output here instead of stdout, plus `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Size, degree and girth of a graph.
    Graph(GraphArgs),
    /// One realization of the environment as CSV `(vertex, slot, value)`.
    Sample(SampleArgs),
    /// `T(f)` for one environment, optionally with `m_eps`.
    Tfun(TfunArgs),
    /// Table of `alpha_ij` for a graph or a truncated tree.
    Alpha(AlphaArgs),
    /// `H(f, g)` from a saved alpha table.
    Hform(HformArgs),
    /// Covariance kernel on a grid of cell midpoints, as CSV.
    KernelGrid(KernelGridArgs),
    /// Limiting density of the squared walk, as CSV.
    Density(DensityArgs),
    /// Numerical identity checks.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Monte Carlo campaign from a TOML config.
    Mc(McArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    /// Full description such as `cycle n=200`, `lcf name=foster` or `cayley p=5 gens=standard`.
    #[arg(long, conflicts_with = "family")]
    pub graph: Option<String>,
    /// Family name (`cycle`, `lcf`, `cayley`) when not using `--graph`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub p: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct SamplerArgs {
    /// `antisym`, `balanced` or `permvec`; defaults to `antisym` for d = 2 and `permvec` otherwise.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Base vector for `permvec`, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub base_vector: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TfunArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Power series, e.g. `coeffs=0,0,1` or `coeffs=1,0.5,0.25 radius=2`.
    #[arg(long)]
    pub f: String,
    /// Use `f(z^2)` instead of `f`.
    #[arg(long)]
    pub squared: bool,
    /// Also evaluate the finite-difference quantity `m_eps`.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AlphaArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Use the `d`-regular tree instead of a graph.
    #[arg(long, conflicts_with_all = ["graph", "family"])]
    pub tree: Option<usize>,
    /// Truncation depth of the tree; the smallest exact depth by default.
    #[arg(long, requires = "tree")]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub imax: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct HformArgs {
    /// Alpha table written by `girthlab alpha`.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub f: String,
    #[arg(long)]
    pub g: String,
}

#[derive(Debug, Args, Serialize)]
pub struct KernelGridArgs {
    #[arg(long)]
    pub d: f64,
    #[arg(long, default_value_t = 200)]
    pub nx: usize,
    #[arg(long, default_value_t = 200)]
    pub ny: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub d: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCommand {
    /// Closed form against the transform of the kernel.
    Stieltjes(StieltjesArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct StieltjesArgs {
    #[arg(long)]
    pub d: f64,
    /// Complex numbers are written like `0.5+0.2i`.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: String,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Also dump the per-sample values as CSV.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
    /// Exit with status 1 when a statistical check fails.
    #[arg(long)]
    pub strict: bool,
}

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
