//! `gsim`: generate instances, inspect spectra, solve Max-cut on the
//! simulated machine, and run the truncation and noise studies.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{ConfigError, Study};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_GUARD: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "gsim", version, about = "Eigendecomposition-based spatial photonic Ising machine simulator")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random weighted graph (rudy + JSON).
    Gen(GenArgs),
    /// Eigendecompose a graph's or matrix's interaction matrix.
    Decompose(DecomposeArgs),
    /// Solve Max-cut with simulated annealing on the machine.
    Solve(SolveArgs),
    /// Run a study and write CSV/JSON/.dat reports.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, conflicts_with = "density", required_unless_present = "density")]
    pub degree: Option<usize>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub high: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// File stem for the written graph.
    #[arg(long, default_value = "graph")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Graph (.rudy, edge-list .json) or matrix (.csv, {"n","J"} .json).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Analytic,
    Field,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseModeArg {
    PerHrv,
    PerFrame,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Eigencomponents kept (default: all).
    #[arg(long)]
    pub k: Option<usize>,
    /// Amplitude scale of the intensity vectors.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = BackendArg::Analytic)]
    pub backend: BackendArg,
    /// Macropixel edge length for the field backend.
    #[arg(long, default_value_t = gsim::optics::DEFAULT_BLOCK)]
    pub block: usize,
    /// Noise standard deviation as a fraction of the HRV span.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = NoiseModeArg::PerHrv)]
    pub noise_mode: NoiseModeArg,
    /// Initial temperature (default: HRV span estimate).
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = gsim::anneal::DEFAULT_RATE)]
    pub rate: f64,
    #[arg(long, default_value_t = gsim::anneal::DEFAULT_ITERS)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub flip_floor: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Compare against the exhaustive optimum.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub study: Study,
    /// TOML config; omitted keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub graph_seeds: Option<usize>,
}

fn run(cli: Cli) -> anyhow::Result<String> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(ConfigError(vec!["--jobs must be at least 1".into()]).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Solve(a) => commands::solve(a),
        Command::Experiment(a) => commands::experiment(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_USAGE;
        }
        if cause.is::<toml::de::Error>() {
            return EXIT_PARSE;
        }
        if let Some(e) = cause.downcast_ref::<gsim::Error>() {
            return match e {
                gsim::Error::SizeGuard { .. } => EXIT_GUARD,
                e if e.is_parse() => EXIT_PARSE,
                gsim::Error::DimensionMismatch { .. } => EXIT_PARSE,
                gsim::Error::InvalidParameter(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
