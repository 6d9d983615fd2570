mod config;
mod threshold;

use clap::{Parser, Subcommand};
use config::{parse_methods, ModeSelection, RunConfig, Sweep};
use sparse_oracle::experiment::{sweep_part1, sweep_part2, sweep_single, write_csv, Manifest, ScenarioConfig};
use sparse_oracle::verify::{run_suite, Suite, VerifyOptions};
use sparse_oracle::Error;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_VERIFY: u8 = 5;

#[derive(Parser)]
#[command(name = "sparse-oracle", version, about = "Bayes-oracle multiple testing and mBIC model selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print exact and asymptotic cutoffs for one rule.
    Threshold(threshold::ThresholdArgs),
    /// Run a simulation sweep and write CSV.
    Simulate(SimulateArgs),
    /// Run an invariant suite.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "sigma-mode", value_enum)]
    sigma_mode: Option<ModeSelection>,
    /// Comma-separated, e.g. `oracle,mBIC,BH`.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long, value_enum)]
    sweep: Option<Sweep>,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// asymptotics, nesting or oracle-equivalence
    suite: String,
    #[arg(long, default_value_t = 10_000)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::UnsupportedPrior(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn resolve(args: &SimulateArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let s = &mut cfg.scenario;
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.replicates {
        s.replicates = v;
    }
    if let Some(v) = args.m {
        s.m_total = v;
    }
    if let Some(v) = args.p {
        s.p = v;
    }
    if let Some(v) = args.alpha {
        s.alpha = v;
    }
    if let Some(v) = &args.methods {
        s.methods = parse_methods(v)?;
    }
    if let Some(v) = args.sigma_mode {
        cfg.modes = v;
    }
    if let Some(v) = args.sweep {
        cfg.sweep = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let cfg = resolve(args)?;
    let modes = cfg.modes.modes();
    let rows = match cfg.sweep {
        Sweep::Part1 => sweep_part1(&cfg.scenario, &modes)?,
        Sweep::Part2 => sweep_part2(&cfg.scenario, &modes)?,
        Sweep::Single => {
            let mut rows = vec![];
            for mode in modes {
                rows.extend(sweep_single(&ScenarioConfig { sigma_mode: mode, ..cfg.scenario.clone() })?);
            }
            rows
        }
    };
    let manifest = Manifest::new(cfg.scenario.seed, &cfg.canonical(), cfg.sweep.name());
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows, &manifest).expect("writing to memory");
    match &args.out {
        Some(path) => {
            std::fs::write(path, &buf).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?
        }
        None => std::io::stdout().write_all(&buf).map_err(|e| Error::Config(format!("cannot write to stdout: {e}")))?,
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let suite: Suite = args.suite.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let report = run_suite(suite, &VerifyOptions { instances: args.instances, seed: args.seed })?;
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("suite {} failed", args.suite)))
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SPARSE_ORACLE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("SPARSE_ORACLE_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Threshold(args) => {
            print!("{}", threshold::run(args)?);
            Ok(())
        }
        Command::Simulate(args) => simulate(args),
        Command::Verify(args) => verify(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
