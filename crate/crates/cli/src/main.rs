//! `wignerlab`: reproducible verification runs from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a verified
//! contract was violated.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, Output};
use config::{Format, Overrides, RunConfig};

const THREADS_ENV: &str = "WIGNERLAB_THREADS";

#[derive(Parser)]
#[command(name = "wignerlab", version, about = "Group-invariant states, Wigner sets and crossed products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the intersection of Wigner sets with the fixed space of the averaged map.
    WignerVerify(CommonArgs),
    /// Average a seed state into an invariant state.
    InvariantState(CommonArgs),
    /// Dimension and covariance checks for a crossed product by a finite group.
    Crossed(CommonArgs),
    /// Entropy sweep over uniform partitions.
    Entropy(CommonArgs),
    /// Invariant separating states over a set of base points.
    Bundle(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output file (stdout if omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    #[arg(long, value_name = "N")]
    dim: Option<usize>,
    /// su2, su3, u1, z<N>, q8, trivial or file:PATH.
    #[arg(long, value_name = "SPEC")]
    group: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
            tol: self.tol,
            dim: self.dim,
            group: self.group.clone(),
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure thread pool: {e}"))
}

type Pipeline = fn(&RunConfig) -> Result<Output, Failure>;

fn run(cli: Cli) -> Result<Output, Failure> {
    let (name, args, default_format, f): (&str, &CommonArgs, Format, Pipeline) =
        match &cli.command {
            Command::WignerVerify(a) => ("wigner-verify", a, Format::Json, commands::wigner_verify),
            Command::InvariantState(a) => ("invariant-state", a, Format::Json, commands::invariant_state),
            Command::Crossed(a) => ("crossed", a, Format::Json, commands::crossed),
            Command::Entropy(a) => ("entropy", a, Format::Csv, commands::entropy),
            Command::Bundle(a) => ("bundle", a, Format::Json, commands::bundle),
        };
    let cfg = RunConfig::resolve(name, args.config.as_deref(), args.overrides(), default_format)?;
    let out = f(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &out.body).map_err(|e| {
            config::config_err(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{}", out.body),
    }
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(out) if out.ok => {
            eprintln!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Ok(out) => {
            eprintln!("contract violated: {}", out.summary);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
