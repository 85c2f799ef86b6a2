//! Command-line front end: matrix files in, one JSON [`RunReport`] out.
//!
//! Exit codes: 0 success, 2 bad input, 3 route disagreement, 4 failed
//! property check, 1 anything else.

mod commands;
pub mod matrix_io;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use matrix_io::{format_matrix, parse_matrix, read_matrix, write_matrix, MatrixFormat};
pub use report::{RunReport, SCHEMA};

use crate::error::Result;
use crate::psd::TolerancePolicy;

#[derive(Debug, Clone, Parser)]
#[command(name = "shorted-ops", version, about = "Parallel sums, τ_G and Lebesgue decompositions of PSD matrices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Tolerance overrides and I/O options, accepted before or after the
/// subcommand. Unset tolerances keep their library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Relative eigenvalue cutoff for ranks and pseudoinverses [default: dim·2^-46]
    #[arg(long, global = true, value_name = "REL")]
    pub tol_rank: Option<f64>,
    /// Convergence threshold, relative to 1 + ‖·‖ [default: 1e-12]
    #[arg(long, global = true, value_name = "ABS")]
    pub tol_conv: Option<f64>,
    /// Width of the eigenvalue-1 cluster and of the subspace-membership band [default: 1e-8]
    #[arg(long, global = true, value_name = "W")]
    pub eig1_cluster: Option<f64>,
    /// Slack for Loewner comparisons, relative to 1 + ‖·‖ [default: 1e-9]
    #[arg(long, global = true, value_name = "S")]
    pub loewner_slack: Option<f64>,
    /// Iteration cap for the μ-orbit and the M-recurrence [default: 10000]
    #[arg(long, global = true, value_name = "N")]
    pub max_iter: Option<usize>,
    /// Base seed; ensemble pair `i` uses `seed + i`
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Matrix file format
    #[arg(long, global = true, value_enum, default_value_t = MatrixFormat::Txt)]
    pub format: MatrixFormat,
    /// Write the report here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn policy(&self) -> Result<TolerancePolicy> {
        let d = TolerancePolicy::default();
        let pol = TolerancePolicy {
            rank_rel: self.tol_rank.or(d.rank_rel),
            eig1_cluster: self.eig1_cluster.unwrap_or(d.eig1_cluster),
            conv_abs: self.tol_conv.unwrap_or(d.conv_abs),
            loewner_slack: self.loewner_slack.unwrap_or(d.loewner_slack),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        };
        pol.validate()?;
        Ok(pol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Shorted,
    Regularized,
    Definite,
    ViaM,
    All,
}

/// Ensemble description. With `--rank-g` and `--rank-x` the pattern is
/// fixed (overlap defaults to the smallest feasible one); without them each
/// pair draws its own ranks.
#[derive(Debug, Clone, Default, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub rank_g: Option<usize>,
    #[arg(long)]
    pub rank_x: Option<usize>,
    /// dim(ran G ∩ ran X)
    #[arg(long)]
    pub overlap: Option<usize>,
    /// Make G and X commute
    #[arg(long)]
    pub commuting: bool,
    /// Spectral decay rate [default: 1 for fixed patterns, random otherwise]
    #[arg(long)]
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// X:G by one or all routes
    Parsum {
        x: PathBuf,
        g: PathBuf,
        #[arg(long, value_enum, default_value_t = RouteArg::All)]
        route: RouteArg,
    },
    /// τ_G(X) by all five routes
    Tau {
        g: PathBuf,
        x: PathBuf,
        /// Include the full μ-orbit in the report
        #[arg(long)]
        trace: bool,
    },
    /// B = [A]B + (B − [A]B)
    Short { a: PathBuf, b: PathBuf },
    /// Property battery on a pair of files or on a seeded ensemble
    Verify {
        g: Option<PathBuf>,
        x: Option<PathBuf>,
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Write a seeded pair as G and X matrix files plus a spec manifest
    Gen {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        out_dir: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Parsum { .. } => "parsum",
            Command::Tau { .. } => "tau",
            Command::Short { .. } => "short",
            Command::Verify { .. } => "verify",
            Command::Gen { .. } => "gen",
        }
    }
}

/// Runs one parsed command line. Never panics on bad input: every failure
/// ends up in the report and its exit code.
pub fn run(cli: &Cli) -> RunReport {
    let pol = match cli.global.policy() {
        Ok(p) => p,
        Err(e) => {
            let mut r = RunReport::new(cli.command.name(), TolerancePolicy::default());
            r.fail(&e);
            return r;
        }
    };
    let mut report = RunReport::new(cli.command.name(), pol);
    if let Err(e) = commands::dispatch(cli, &pol, &mut report) {
        report.fail(&e);
    }
    report
}

/// Parses `args`, runs, emits the report, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { report::EXIT_INPUT } else { report::EXIT_OK };
        }
    };
    let report = run(&cli);
    if let Some(msg) = &report.error {
        eprintln!("shorted-ops {}: {msg}", report.command);
    }
    let json = report.to_json();
    match &cli.global.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("cannot write {}: {e}", path.display());
                return report::EXIT_INPUT;
            }
        }
        None => print!("{json}"),
    }
    report.exit_code
}
