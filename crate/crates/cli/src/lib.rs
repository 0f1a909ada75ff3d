//! Command-line front end for the `cpsd-core` library.
//!
//! Exit codes: 0 success, 1 I/O, parse or invalid input, 2 `ε` outside the
//! admissible range, 3 a randomized stage ran out of retries, 4 a
//! verification check failed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use cpsd_core::caratheodory::Strategy;
use cpsd_core::generators::{Family, GeneratorSpec};
use cpsd_core::{ApproxParams, Exec, Mode};

pub mod commands;
pub mod schema;

pub use commands::{cmd_approximate, cmd_bounds, cmd_crossover, cmd_generate, cmd_verify};
pub use schema::{InstanceFile, ReportFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] cpsd_core::Error),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use cpsd_core::Error as E;
        match self {
            CliError::Io(_) | CliError::Parse(_) => 1,
            CliError::Core(E::OutOfRange { .. }) => 2,
            CliError::Core(E::RetryExhausted { .. }) => 3,
            CliError::Core(
                E::Verification(_) | E::NoConvergence { .. } | E::CompressionResidual { .. },
            ) => 4,
            CliError::Core(_) => 1,
            CliError::Check(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cpsd", version, about = "Low cpsd-rank approximation of cpsd matrices")]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated instance as JSON.
    Generate(GenerateArgs),
    /// Approximate an instance and write a report.
    Approximate(ApproximateArgs),
    /// Tabulate both rank bounds over a parameter grid.
    Bounds(BoundsArgs),
    /// Smallest n where the logarithmic bound drops below n.
    Crossover(CrossoverArgs),
    /// Re-check a report against its instance.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FamilyArg {
    Identity,
    Projection,
    CpGeometric,
    RandomPsd,
    RandomDiagonal,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Identity => Family::Identity,
            FamilyArg::Projection => Family::Projection,
            FamilyArg::CpGeometric => Family::CpGeometric,
            FamilyArg::RandomPsd => Family::RandomPsd,
            FamilyArg::RandomDiagonal => Family::RandomDiagonal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Stage1,
    Stage2,
    Auto,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Stage1 => Mode::Stage1Only,
            ModeArg::Stage2 => Mode::Stage2Full,
            ModeArg::Auto => Mode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Sampling,
    Greedy,
    Auto,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Sampling => Strategy::Sampling,
            StrategyArg::Greedy => Strategy::Greedy,
            StrategyArg::Auto => Strategy::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    Json,
    #[default]
    Csv,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: usize,
    /// Factor side; defaults to n.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long)]
    pub inner_dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GenerateArgs {
    pub fn spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            family: self.family.into(),
            n: self.n,
            d: self.d.unwrap_or(self.n),
            q: self.q,
            inner_dim: self.inner_dim,
            ranks: self.ranks.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct ApproximateArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: ModeArg,
    /// Diagonal witnesses only: keep the output completely positive.
    #[arg(long)]
    pub cp: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 64)]
    pub retry_budget: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ApproximateArgs {
    pub fn params(&self) -> ApproxParams {
        ApproxParams {
            mode: self.mode.into(),
            cp_mode: self.cp,
            seed: self.seed,
            strategy: self.strategy.into(),
            carath_retry_budget: self.retry_budget,
            jl_retry_budget: self.retry_budget,
            exec: Exec::Parallel,
            ..ApproxParams::new(self.eps)
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub ell: Vec<f64>,
    #[arg(long = "L", value_delimiter = ',', default_value = "1")]
    pub big_l: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossoverArgs {
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ell: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    pub big_l: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    pub report: PathBuf,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceFile, CliError> {
    schema::from_json(&read(path)?, &path.display().to_string())
}

pub fn read_report(path: &Path) -> Result<ReportFile, CliError> {
    schema::from_json(&read(path)?, &path.display().to_string())
}

/// Runs one parsed command line on a pool of `cli.threads` workers.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => {
            let file = cmd_generate(&args.spec())?;
            emit(args.out.as_deref(), &schema::to_json(&file))
        }
        Command::Approximate(args) => {
            let file = read_instance(&args.instance)?;
            let report = cmd_approximate(&file, &args.params())?;
            emit(args.out.as_deref(), &schema::to_json(&report))
        }
        Command::Bounds(args) => {
            let rows = cmd_bounds(&args.n, &args.ell, &args.big_l, &args.eps)?;
            let text = match args.format {
                Format::Csv => commands::bounds_csv(&rows),
                Format::Json => schema::to_json(&rows),
            };
            emit(args.out.as_deref(), &text)
        }
        Command::Crossover(args) => {
            let row = cmd_crossover(args.eps, args.ell, args.big_l)?;
            let text = match args.format {
                Format::Csv => format!("{}\n", row.n_star),
                Format::Json => schema::to_json(&row),
            };
            emit(args.out.as_deref(), &text)
        }
        Command::Verify(args) => {
            let inst = read_instance(&args.instance)?;
            let report = read_report(&args.report)?;
            cmd_verify(&inst, &report)?;
            println!("ok");
            Ok(())
        }
    }
}
