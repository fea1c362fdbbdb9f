mod report;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corner_benders::vrpsd::{generate, Mode};

/// Exit codes.
const EXIT_TIME_LIMIT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_NO_DATA: u8 = 66;
const EXIT_SOFTWARE: u8 = 70;
const EXIT_IO: u8 = 74;

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, msg: msg.into() }
    }

    pub fn no_data(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_NO_DATA, msg: msg.into() }
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_SOFTWARE, msg: msg.into() }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Failure { code: EXIT_IO, msg: format!("{}: {err}", path.display()) }
    }
}

#[derive(Parser)]
#[command(name = "corner-benders", version, about = "VRPSD cutting-plane solver with corner Benders cuts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance: root cutting-plane loop, then branch and bound.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// parada, benders, lagrange or corner.
        #[arg(long, default_value = "corner")]
        mode: Mode,
        /// Stop after the root relaxation.
        #[arg(long)]
        root_only: bool,
        /// Wall-clock limit in seconds.
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        /// Convergence trace `iter,time_s,bound,cut_type,cuts_total`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Summary file; the row is appended, with a header if the file is new.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Expected fill of each vehicle.
        #[arg(long, default_value_t = 0.9)]
        capacity_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cumulative distribution of a metric per mode over summary files.
    Report {
        #[arg(long)]
        glob: String,
        #[arg(long, value_enum)]
        metric: report::Metric,
        /// CSV `instance,opt_value` with known optima.
        #[arg(long)]
        optimum: Option<PathBuf>,
        /// Step-chart output.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Profile CSV output (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve {
            instance,
            mode,
            root_only,
            time_limit,
            csv,
            summary,
        } => {
            if !(time_limit >= 0.0) {
                return Err(Failure::usage("--time-limit must be nonnegative"));
            }
            let args = solve::SolveArgs {
                instance,
                mode,
                root_only,
                time_limit,
                csv,
                summary,
            };
            let outcome = solve::run(&args)?;
            Ok(match outcome {
                solve::Outcome::Done => 0,
                solve::Outcome::TimeLimit => EXIT_TIME_LIMIT,
                solve::Outcome::Infeasible => EXIT_INFEASIBLE,
            })
        }
        Command::Gen {
            n,
            k,
            capacity_ratio,
            seed,
            out,
        } => {
            let inst = generate(n, k, capacity_ratio, seed).map_err(|e| Failure::usage(e.to_string()))?;
            let text = inst.to_text();
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| Failure::io(&path, e))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Report {
            glob,
            metric,
            optimum,
            svg,
            out,
        } => {
            report::run(&glob, metric, optimum.as_deref(), svg.as_deref(), out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
