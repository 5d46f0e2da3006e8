//! `pdn` — command-line driver for the boundary-symbol calculus library.
//!
//! Exit codes: 0 all selected checks passed, 1 at least one check failed,
//! 2 configuration or runtime error (the message goes to stderr).
//! Every report file is a deterministic function of (config, seed);
//! timestamps are confined to the `run_meta.json` sidecar.

mod cmd;
mod config;
mod out;

use clap::{Parser, Subcommand};
use config::RunConfig;
use out::OutDir;
use poisson_dn::Result;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "pdn",
    version,
    about = "Boundary symbols, Poisson semigroup, and Dirichlet-to-Neumann \
             verification for divergence-form elliptic operators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the symbols mu, lambda, q and check their bounds.
    CheckSymbol {
        /// TOML run configuration.
        config: PathBuf,
    },
    /// Solve the Dirichlet problem and emit the solution and traces.
    Solve {
        config: PathBuf,
        /// Boundary data: `mode:k1[,k2]` or `const:re[,im]`.
        #[arg(long)]
        data: String,
    },
    /// Run verification suites against the elliptic-solver oracle.
    Verify {
        config: PathBuf,
        /// Suite name (default: the config's run.suites list).
        #[arg(long)]
        suite: Option<String>,
        /// Double (N, Nt) per family and append the refinement series.
        #[arg(long)]
        refine: bool,
    },
    /// Emit weighted-kernel slices and decay fits.
    Kernel {
        config: PathBuf,
        /// Weight tag: unit | pi-prime | zeta | q-weight.
        #[arg(long)]
        weight: String,
        /// Comma-separated evaluation times.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::CheckSymbol { .. } => "check-symbol",
            Cmd::Solve { .. } => "solve",
            Cmd::Verify { .. } => "verify",
            Cmd::Kernel { .. } => "kernel",
        }
    }

    fn config_path(&self) -> &PathBuf {
        match self {
            Cmd::CheckSymbol { config }
            | Cmd::Solve { config, .. }
            | Cmd::Verify { config, .. }
            | Cmd::Kernel { config, .. } => config,
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let rc = RunConfig::load(cli.cmd.config_path())?;
    let out = OutDir::new(rc.out_dir())?;
    let start = Instant::now();
    let ok = match &cli.cmd {
        Cmd::CheckSymbol { .. } => cmd::check_symbol::run(&rc, &out)?,
        Cmd::Solve { data, .. } => cmd::solve::run(&rc, data, &out)?,
        Cmd::Verify { suite, refine, .. } => {
            cmd::verify_cmd::run(&rc, suite.as_deref(), *refine, &out)?
        }
        Cmd::Kernel { weight, times, .. } => cmd::kernel::run(&rc, weight, times, &out)?,
    };
    out.write_meta(cli.cmd.name(), cli.cmd.config_path(), start.elapsed())?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
