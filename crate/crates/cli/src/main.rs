//! `surfmg`: build multigrid hierarchies for triangle meshes and run the
//! solvers and demos on them.

mod commands;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surfmg::decimate::Strategy;
use surfmg::fem::Energy;
use surfmg::flatten::ParamEnergy;

#[derive(Debug, Parser)]
#[command(name = "surfmg", version, about = "Surface geometric multigrid with intrinsic prolongation")]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decimate a mesh into a multigrid hierarchy (.ssph).
    Build(BuildArgs),
    /// Solve a Poisson problem on the finest level.
    Solve(SolveArgs),
    /// Smooth a per-vertex function for a list of smoothness weights.
    Smooth(SmoothArgs),
    /// Run implicit mean-curvature flow, rebuilding the system every step.
    Flow(FlowArgs),
    /// Compare the intrinsic multigrid against relaxation and one-ring baselines.
    Bench(BenchArgs),
    /// Write the fine-to-coarse barycentric map as CSV.
    ExportMap(ExportMapArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Vertex ratio between consecutive levels.
    #[arg(long, default_value_t = 0.25)]
    pub ratio: f64,
    /// Smallest allowed level size.
    #[arg(long = "min-verts", default_value_t = 500)]
    pub min_verts: usize,
    #[arg(long, default_value_t = Strategy::Midpoint)]
    pub decimation: Strategy,
    #[arg(long, default_value_t = ParamEnergy::Lscm)]
    pub energy: ParamEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxArg {
    GaussSeidel,
    Jacobi,
    ColoredGaussSeidel,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SolverArgs {
    /// Relative residual at which to stop.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long = "max-cycles", default_value_t = 100)]
    pub max_cycles: usize,
    #[arg(long = "pre-sweeps", default_value_t = 2)]
    pub pre_sweeps: usize,
    #[arg(long = "post-sweeps", default_value_t = 2)]
    pub post_sweeps: usize,
    #[arg(long, value_enum, default_value_t = RelaxArg::GaussSeidel)]
    pub relaxation: RelaxArg,
    /// Damping for Jacobi relaxation.
    #[arg(long, default_value_t = 0.8)]
    pub omega: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[arg(long, value_enum, default_value_t = Problem::Poisson)]
    pub problem: Problem,
    /// Per-vertex source term (single-column CSV).
    #[arg(long)]
    pub rhs: PathBuf,
    /// Solution output (single-column CSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Convergence history output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Known values: an index CSV and a value CSV.
    #[arg(long, num_args = 2, value_names = ["IDX_CSV", "VALS_CSV"])]
    pub dirichlet: Option<Vec<PathBuf>>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Comma-separated smoothness weights in [0, 1).
    #[arg(long = "alpha-list", value_delimiter = ',', required = true)]
    pub alpha_list: Vec<f64>,
    #[arg(long, default_value_t = Energy::Dirichlet)]
    pub energy: Energy,
    /// Input function (single-column CSV).
    #[arg(long = "fn")]
    pub function: PathBuf,
    /// Directory for the smoothed functions and the manifest.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    /// Directory for one OBJ per step and the manifest.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Gs,
    Onering,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[arg(long, value_enum, default_value_t = Problem::Poisson)]
    pub problem: Problem,
    /// Source term; a smooth function of position when absent.
    #[arg(long)]
    pub rhs: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Baseline::Gs, Baseline::Onering])]
    pub baselines: Vec<Baseline>,
    /// Relaxation-only work budget as a multiple of the multigrid's sweeps.
    #[arg(long = "gs-budget", default_value_t = 5)]
    pub gs_budget: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ExportMapArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();
    let result = match cli.command {
        Command::Build(a) => commands::build(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Smooth(a) => commands::smooth(&a),
        Command::Flow(a) => commands::flow(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::ExportMap(a) => commands::export_map(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
