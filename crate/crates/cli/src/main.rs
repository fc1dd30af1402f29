use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mor_iha_cli::ingest::write_system;
use mor_iha_cli::job::{run_job, JobFile};
use mor_iha_cli::synthetic::{make_synthetic, SyntheticKind};
use mor_iha_cli::CliError;

const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "mor-iha", version, about = "Interpolatory H-infinity model reduction of SISO LTI systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a system with one or more methods and write a report.
    Run(RunArgs),
    /// Write a seeded synthetic system as Matrix Market files.
    Synth {
        /// sss, generic or resonant-chain
        #[arg(long)]
        kind: SyntheticKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Key-value job file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding A.mtx, b.mtx, c.mtx and optionally E.mtx.
    #[arg(long)]
    input_dir: Option<PathBuf>,
    /// Synthetic input instead of files, as kind:n.
    #[arg(long)]
    synthetic: Option<String>,
    /// Comma-separated subset of iha, irka, bt, mbt.
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated reduction orders.
    #[arg(long)]
    orders: Option<String>,
    /// surrogate, exact or both, optionally with sampled-norms and dump-curves.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling grid as lo:hi:count (log spaced).
    #[arg(long)]
    grid: Option<String>,
    /// IRKA convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn job_file(args: RunArgs) -> Result<JobFile, CliError> {
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            JobFile::parse(&text)?
        }
        None => JobFile::default(),
    };
    let orders = match args.orders {
        Some(s) => Some(mor_iha_cli::job::parse_list::<usize>(&s).map_err(CliError::Invalid)?),
        None => None,
    };
    let flags = JobFile {
        input_dir: args.input_dir,
        synthetic: args.synthetic,
        method: args.method,
        orders,
        mode: args.mode,
        out: args.out,
        seed: args.seed,
        grid: args.grid,
        tol: args.tol,
    };
    Ok(base.overridden_by(flags))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("MOR_IHA_THREADS") else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Invalid(format!("MOR_IHA_THREADS='{value}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Synth { kind, n, seed, out } => {
            let sys = make_synthetic(kind, n, seed)?;
            write_system(&sys, &out)?;
            Ok(0)
        }
        Command::Run(args) => {
            let job = job_file(args)?.into_job()?;
            let outcome = run_job(&job)?;
            print!("{}", outcome.report.to_csv());
            for row in outcome.report.rows.iter().filter(|r| !r.is_ok()) {
                eprintln!("{} r={}: {}", row.method, row.r, row.status);
            }
            Ok(outcome.exit_code as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_INVALID);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
