//! `sieved`: spectra of sieved Fibonacci Hamiltonians from the command line.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "sieved",
    version,
    about = "Spectra of sieved Fibonacci Hamiltonians via the trace map"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct ModelArgs {
    /// Coupling constant (>= 0; 0 is the free operator).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Sieve spacing (>= 1).
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bands of Sigma_k = {E : |x_k(E)| <= 1}.
    Bands {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: usize,
        /// Band-edge tolerance (default 1e-10 up to k = 14, 1e-8 above).
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bands of the cover Sigma_k ∪ Sigma_{k+1}.
    Cover {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Box-counting dimension of a cover, optionally inside a window.
    Dimension {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        /// Smallest box size (default: from the band widths).
        #[arg(long)]
        eps_min: Option<f64>,
        /// Largest box size (default: a tenth of the extent).
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long, default_value_t = 20)]
        scales: usize,
        /// Energy window LO:HI.
        #[arg(long, value_parser = commands::parse_window, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Energies 2cos(pi j / l) where the invariant vanishes.
    SpecialEnergies {
        #[command(flatten)]
        model: ModelArgs,
        /// Generations followed for the membership verdict.
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Lyapunov exponents on an energy grid.
    Lyapunov {
        #[command(flatten)]
        model: ModelArgs,
        /// Energy grid LO:HI:N.
        #[arg(long, value_parser = commands::parse_grid, allow_hyphen_values = true)]
        grid: (f64, f64, usize),
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Eigenvalues of a finite truncation checked against a cover.
    OracleCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2500)]
        size: usize,
        #[arg(long, default_value_t = 12)]
        k: usize,
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Experiment matrix over several sieve spacings, written to a directory.
    Report {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// Comma-separated sieve spacings.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        ells: Vec<u32>,
        /// Generation for l = 1; other spacings use the generation of closest period.
        #[arg(long, default_value_t = 14)]
        k: usize,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[arg(long, default_value_t = 20)]
        scales: usize,
        /// Output directory; rerunning with the same parameters resumes.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.workers {
        anyhow::ensure!(
            n >= 1,
            commands::UsageError("--workers must be at least 1".into())
        );
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Bands {
            model,
            k,
            tol,
            output,
        } => commands::bands(model, k, tol, &output, false),
        Command::Cover {
            model,
            k,
            tol,
            output,
        } => commands::bands(model, k, tol, &output, true),
        Command::Dimension {
            model,
            k,
            tol,
            eps_min,
            eps_max,
            scales,
            window,
            output,
        } => commands::dimension(model, k, tol, (eps_min, eps_max, scales), window, &output),
        Command::SpecialEnergies { model, k, output } => {
            commands::special_energies(model, k, &output)
        }
        Command::Lyapunov {
            model,
            grid,
            k,
            output,
        } => commands::lyapunov(model, grid, k, &output),
        Command::OracleCheck {
            model,
            size,
            k,
            delta,
            tol,
            output,
        } => commands::oracle_check(model, size, k, delta, tol, &output),
        Command::Report {
            lambda,
            ells,
            k,
            tol,
            scales,
            out,
        } => report::run(
            &report::ReportConfig {
                lambda,
                ells,
                k,
                tol,
                scales,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
