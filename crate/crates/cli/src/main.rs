use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Build, widen and verify exact ReLU networks for discrete piecewise
/// linear functions. JSON goes to stdout, a summary to stderr.
#[derive(Parser, Debug)]
#[command(name = "pwlnet", version)]
pub struct Cli {
    /// JSON config with tolerances, bundle settings and seed.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Three-layer synthesis.
    Synth3 {
        #[arg(long)]
        pwl: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// One output unit per coordinate of a vector-valued function.
        #[arg(long, conflicts_with = "classify")]
        multi: bool,
        /// Treat each subdomain as a category and build a ReLU classifier.
        #[arg(long)]
        classify: bool,
        /// Redundant units added to every stage.
        #[arg(long, default_value_t = 0)]
        extra_units: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Deep synthesis through a recursive partition of the subdomains.
    Synthdeep {
        #[arg(long)]
        pwl: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Expected number of output units (must match the function).
        #[arg(long)]
        outputs: Option<usize>,
        #[arg(long, value_enum, default_value_t = ComplementArg::Zero)]
        complement: ComplementArg,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decoder mapping codes back to target points.
    Decode {
        #[arg(long)]
        codes: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Widen a synthesized network without changing its outputs on the data.
    Widen {
        #[arg(long)]
        net: PathBuf,
        /// One width per hidden layer, or a single width for all of them.
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        /// Report written when the network was synthesized.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the widened network's report.
        #[arg(long)]
        new_report: Option<PathBuf>,
    },
    /// Distinguishable order of a point set.
    Order {
        #[arg(long)]
        points: PathBuf,
    },
    /// Region counts of a hyperplane arrangement.
    CountRegions {
        #[arg(long)]
        arrangement: PathBuf,
        /// Also enumerate regions by sign vector.
        #[arg(long)]
        enumerate: bool,
        /// Write the enumerated regions as CSV to this file.
        #[arg(long, requires = "enumerate")]
        csv: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Monte Carlo probability that random unit-row matrices have full rank.
    RankProb {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        sequential: bool,
    },
    /// Check a network against a function point by point.
    Verify {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        pwl: PathBuf,
        /// Also re-check a construction report against the network.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a built-in fixture with its network and report.
    Demo {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(pwlnet::fixtures::NAMES))]
        fixture: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Evaluate a network on points.
    Eval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ComplementArg {
    Zero,
    LeastNorm,
}

/// Exit code classes.
#[derive(Debug)]
pub enum Failure {
    /// Output produced but not exact.
    Verification(String),
    /// Unreadable, malformed or unsupported input.
    Input(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
