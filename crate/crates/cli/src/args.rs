//! Command-line flags and their translation to experiment configs.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::experiment::{Criterion, ExperimentConfig, ExponentMode, Format, OutputSpec, Task};

#[derive(Debug, Parser)]
#[command(name = "diolab", version, about = "Metric Diophantine approximation experiments")]
pub struct Cli {
    /// Worker threads.
    #[arg(long, global = true, env = "DIOLAB_THREADS")]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; taken from the --out extension by default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ProblemArg {
    /// Problem file (TOML or JSON).
    #[arg(long)]
    pub problem: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partial sums of a criterion series.
    Sum {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long, value_enum, default_value = "schmidt")]
        criterion: Criterion,
        /// Dimension function: r^s, r^s*log^k or table:<path.csv>.
        #[arg(long)]
        f: Option<String>,
        /// Exponent for cor1 / cor2.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long = "H")]
        h: u64,
    },
    /// Critical exponent (Hausdorff dimension).
    Exponent {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long, value_enum, default_value = "analytic")]
        mode: ExponentMode,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        #[arg(long = "H", default_value_t = 1 << 14)]
        h: u64,
    },
    /// Monte Carlo measure over height windows.
    Measure {
        #[command(flatten)]
        problem: ProblemArg,
        /// dyadic:a..b or edges:h0,h1,...
        #[arg(long)]
        windows: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Box-counting dimension of a generation set.
    Boxdim {
        #[command(flatten)]
        problem: ProblemArg,
        /// Generations K, meaning windows dyadic:0..K.
        #[arg(long, conflicts_with = "windows")]
        generations: Option<u32>,
        #[arg(long)]
        windows: Option<String>,
        /// Dyadic levels a..b: box sides 2^-a .. 2^-b.
        #[arg(long)]
        scales: String,
        /// exact, center or subgrid:k.
        #[arg(long)]
        sampling: Option<String>,
        /// Scale indices a..b entering the fit.
        #[arg(long)]
        fit: Option<String>,
    },
    /// Slice unions and deflated contents.
    Slice {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 8)]
        slices: usize,
        #[arg(long)]
        windows: String,
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The a with |a| in [H1, H2] satisfying the inequalities at x.
    Enumerate {
        #[command(flatten)]
        problem: ProblemArg,
        /// Comma-separated coordinates, column by column.
        #[arg(long)]
        x: String,
        #[arg(long = "H1")]
        h1: u64,
        #[arg(long = "H2")]
        h2: u64,
    },
    /// Invariant bundle: collapse, equivalence, exponents, union-bounds, covering, transform, slicing or all.
    Check {
        #[arg(long)]
        preset: String,
    },
    /// Runs an experiment config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn experiment(problem: Option<ProblemArg>, task: Task) -> ExperimentConfig {
    ExperimentConfig {
        name: None,
        problem: None,
        problem_path: problem.map(|p| p.problem),
        task,
        output: None,
    }
}

/// The config a command stands for, and the directory relative paths resolve against.
pub fn to_config(cli: Cli) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let (mut cfg, base) = match cli.command {
        Command::Sum { problem, criterion, f, s, h } => (experiment(Some(problem), Task::Sum { criterion, f, s, h }), None),
        Command::Exponent { problem, mode, tol, h } => (
            experiment(Some(problem), Task::Exponent { mode, tol, h, bracket: None }),
            None,
        ),
        Command::Measure { problem, windows, samples, seed } => {
            (experiment(Some(problem), Task::Measure { windows, samples, seed }), None)
        }
        Command::Boxdim { problem, generations, windows, scales, sampling, fit } => {
            let windows = match (generations, windows) {
                (_, Some(w)) => w,
                (Some(k), None) => format!("dyadic:0..{k}"),
                (None, None) => anyhow::bail!("boxdim needs --generations or --windows"),
            };
            (experiment(Some(problem), Task::Boxdim { windows, scales, sampling, fit }), None)
        }
        Command::Slice { problem, f, slices, windows, samples, seed } => (
            experiment(Some(problem), Task::Slice { f, slices, windows, samples, seed }),
            None,
        ),
        Command::Enumerate { problem, x, h1, h2 } => {
            let x = x
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .context("--x: expected comma-separated numbers")?;
            (experiment(Some(problem), Task::Enumerate { x, h1, h2 }), None)
        }
        Command::Check { preset } => (experiment(None, Task::Check { preset }), None),
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            (cfg, config.parent().map(|p| p.to_path_buf()))
        }
    };
    if let Some(path) = cli.out {
        cfg.output = Some(OutputSpec { path, format: cli.format });
    } else if let (Some(fmt), Some(out)) = (cli.format, cfg.output.as_mut()) {
        out.format = Some(fmt);
    }
    Ok((cfg, base))
}
