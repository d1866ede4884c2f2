//! Command-line front end.
//!
//! Exit codes: 0 success, 1 identity or criterion failure, 2 configuration
//! error, 3 numerical divergence.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{CliError, RossbyRequest};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "coriolis-sphere", version, about = "Viscous flow on a rotating sphere")]
pub struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides the seed of a random initial condition.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the identity suite.
    Verify {
        #[arg(long, default_value_t = 15)]
        degree: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Negative control: flip the sign of one Christoffel symbol.
        #[arg(long)]
        flip_christoffel: bool,
    },
    /// Measure the precession of a single mode against `-2 omega / (l(l+1))`.
    Rossby {
        #[arg(long)]
        l: usize,
        #[arg(long, allow_negative_numbers = true)]
        m: i64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        /// Truncation degree (default: max(l, 10)).
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 1e-4)]
        amplitude: f64,
    },
    /// Run a config over an (omega, mu_s) grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &std::path::Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path).map_err(CliError::Config)?;
    if let Some(seed) = seed {
        cfg.init = cfg.init.with_seed(seed);
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        // a pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Run { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let outcome = commands::cmd_run(&cfg, &out)?;
            print!("{}", outcome.summary());
            Ok(())
        }
        Command::Verify {
            degree,
            radius,
            seed,
            flip_christoffel,
        } => commands::cmd_verify(degree, radius, seed, flip_christoffel).map(|_| ()),
        Command::Rossby {
            l,
            m,
            omega,
            t_end,
            degree,
            dt,
            amplitude,
        } => {
            let req = RossbyRequest {
                l,
                m,
                omega,
                t_end,
                degree: degree.unwrap_or(l.max(10)),
                dt,
                amplitude,
            };
            let outcome = commands::cmd_rossby(&req)?;
            if outcome.pass {
                Ok(())
            } else {
                Err(CliError::Failure("drift outside tolerance".into()))
            }
        }
        Command::Sweep { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let cells = commands::cmd_sweep(&cfg, &out)?;
            println!("{} cells written to {}", cells.len(), out.display());
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
