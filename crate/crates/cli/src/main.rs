//! `lonely`: exact tables, verification suites, coupling runs and Monte Carlo
//! checks for the lonely passenger problem.

mod commands;
mod report;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lonely_passenger::oracle::DEFAULT_LIMIT;
use lonely_passenger::Execution;
use serde::Serialize;

use crate::report::Format;

pub const LIMIT_ENV: &str = "LONELY_ENUM_LIMIT";

#[derive(Debug, Parser)]
#[command(name = "lonely", version, about = "Lonely passenger verification toolkit")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact distributions and probabilities.
    #[command(subcommand)]
    Exact(ExactCmd),
    /// Run a verification suite.
    Check(CheckArgs),
    /// Sample coupled path pairs and check the pathwise inequalities.
    Couple(CoupleArgs),
    /// Monte Carlo estimates.
    #[command(subcommand)]
    Mc(McCmd),
    /// Brute-force enumeration.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NK {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LN {
    #[arg(long)]
    pub l: usize,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum ExactCmd {
    /// P(at least one lonely passenger).
    P(NK),
    /// Joint law of (nonempty buses, lonely passengers) after n arrivals.
    Dist(NK),
    /// Law of the nonempty count at every time, given that exactly l buses fill.
    Ne(LN),
    /// Lonely tail computed directly and by conditioning on the filled-bus count.
    Tail(NK),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Theorem,
    Stirling,
    Lemmas,
    Oracle,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Enumeration limit for the oracle suite.
    #[arg(long, env = LIMIT_ENV, default_value_t = DEFAULT_LIMIT)]
    pub limit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Forward,
    Conditioned,
    Monotone,
    Lonely,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoupleArgs {
    #[arg(value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    /// Filled-bus count of the upper chain (conditioned, monotone, lonely).
    #[arg(long)]
    pub l: Option<usize>,
    /// Bus count of the lower chain (forward).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Swap every pair before checking; must report violations.
    #[arg(long)]
    pub negative_control: bool,
}

#[derive(Debug, Subcommand)]
pub enum McCmd {
    /// Estimate P(at least one lonely passenger).
    P(McArgs),
    /// Estimates for k = 1..=k-max, flagging drops beyond 5 standard errors.
    Shadow(ShadowArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShadowArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum OracleCmd {
    /// Per-time joint law by enumeration, compared with the chain.
    Joint(OracleJoint),
    /// Path marginals over seatings that fill exactly l of l buses.
    Ne(OracleNe),
    /// Law of a functional given N = l, against the filled-bus law.
    Conditioned(OracleConditioned),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleJoint {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, env = LIMIT_ENV, default_value_t = DEFAULT_LIMIT)]
    pub limit: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleNe {
    #[arg(long)]
    pub l: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, env = LIMIT_ENV, default_value_t = DEFAULT_LIMIT)]
    pub limit: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleConditioned {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub l: usize,
    /// lonely-path, nonempty-path, final-lonely or first-passenger-lonely.
    #[arg(long, default_value = "final-lonely")]
    pub functional: String,
    #[arg(long, env = LIMIT_ENV, default_value_t = DEFAULT_LIMIT)]
    pub limit: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match commands::run(&cli.command, exec) {
        Ok(report) => {
            let mut out = io::stdout().lock();
            if let Err(e) = report.write(cli.format, &mut out).and_then(|_| out.flush()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            match report.failure {
                Some(msg) => {
                    eprintln!("verification failed: {msg}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
