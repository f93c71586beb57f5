//! `multilad`: generate synthetic dynamic graphs, score them, and evaluate
//! or benchmark the detectors.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "multilad", version, about = "Laplacian-spectrum change point detection for dynamic graphs")]
struct Cli {
    /// Worker threads for trials and per-view spectra (default: all cores).
    #[arg(long, short = 'j', global = true, value_name = "J")]
    jobs: Option<usize>,

    /// More log output; repeat for debug level.
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a dynamic graph from a TOML schedule.
    Generate(GenerateArgs),
    /// Score an edge stream with one of the detectors.
    Detect(DetectArgs),
    /// Hits@n of a score file against a truth file.
    Eval(EvalArgs),
    /// Run a named benchmark family over many trials.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Schedule and generator settings.
    #[arg(long, value_name = "TOML")]
    pub config: PathBuf,

    /// Edge-stream CSV to write.
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,

    /// Truth file to write (default: `<out stem>.truth.csv`).
    #[arg(long, value_name = "CSV")]
    pub truth: Option<PathBuf>,

    /// Overrides the seed in the config file.
    #[arg(long, env = "LAD_SEED")]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lad,
    Multilad,
    Activity,
    Maxlad,
    Meanlad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LaplacianArg {
    Unnormalized,
    Normalized,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Edge-stream CSV.
    #[arg(long, value_name = "CSV")]
    pub input: PathBuf,

    #[arg(long, value_enum)]
    pub method: MethodArg,

    /// Score CSV to write.
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,

    /// Short window. Required unless the input came from `generate`.
    #[arg(long)]
    pub ws: Option<usize>,

    /// Long window. Required unless the input came from `generate`.
    #[arg(long)]
    pub wl: Option<usize>,

    /// Signature length, `full` or a positive integer (default: `full` for
    /// generated inputs, 6 otherwise).
    #[arg(long)]
    pub k: Option<multilad::SignatureSize>,

    /// Laplacian for lad, maxlad and meanlad.
    #[arg(long, value_enum, default_value = "unnormalized")]
    pub laplacian: LaplacianArg,

    /// Power-mean exponent, multilad only (default -10).
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,

    /// View scored by lad and activity.
    #[arg(long, default_value_t = 0)]
    pub view: usize,

    /// Node universe size (default: header or largest id + 1).
    #[arg(long)]
    pub nodes: Option<usize>,

    /// Eigensolver residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    /// Also write the spectra that were scored (lad and multilad).
    #[arg(long, value_name = "CSV")]
    pub dump_spectrum: Option<PathBuf>,

    /// Eigensolver start-vector seed.
    #[arg(long, env = "LAD_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Score CSV from `detect`.
    #[arg(long, value_name = "CSV")]
    pub scores: PathBuf,

    /// Truth file `t,kind`.
    #[arg(long, value_name = "CSV")]
    pub truth: PathBuf,

    #[arg(long, short = 'n', default_value_t = 7)]
    pub n: usize,

    /// Report CSV to write (default: `<scores stem>.hits.csv`).
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// pure, hybrid, resampled, sbm-cout-sweep, sbm-noise-sweep,
    /// sbm-views-sweep, ba-views-sweep or p-ablation.
    pub experiment: String,

    #[arg(long, default_value_t = 30)]
    pub trials: usize,

    /// Seed of the first trial; trial i uses seed + i.
    #[arg(long, env = "LAD_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Fix the flip-noise level instead of sweeping it.
    #[arg(long)]
    pub noise: Option<f64>,

    /// Fix the expected cross-block degree instead of sweeping it.
    #[arg(long)]
    pub c_out: Option<f64>,

    /// Fix the number of views instead of sweeping it.
    #[arg(long)]
    pub views: Option<usize>,

    /// Fix the power-mean exponent in the p ablation.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,

    /// Report CSV to write (default: `bench-<experiment>.csv`).
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    let argv: Vec<String> = std::env::args().collect();
    pool.install(|| match &cli.command {
        Command::Generate(a) => commands::generate(a, &argv, cli.jobs),
        Command::Detect(a) => commands::detect(a, &argv, cli.jobs),
        Command::Eval(a) => commands::eval(a, &argv, cli.jobs),
        Command::Bench(a) => commands::bench(a, &argv, cli.jobs),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
