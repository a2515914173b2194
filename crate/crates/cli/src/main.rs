//! Command-line front end: minimize the free-energy functional, sweep the
//! chaos gap, run the recursion oracle suite, or simulate coupled systems.
//! Every run writes a manifest plus its result files into one directory;
//! reruns with the same configuration and seed are byte-identical.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.

mod config;
mod output;
mod run;

use clap::{Args, Parser, Subcommand};

use config::{parse_term, Overrides, RunConfig};
use output::OutputSet;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    /// Numerical failure with a report that still has to reach disk.
    NumericalWithOutput(String, OutputSet),
    Io(String),
}

#[derive(Parser)]
#[command(
    name = "spherical-chaos",
    version,
    about = "Free-energy optimization and disorder-chaos toolkit for spherical mean-field spin glasses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(short, long, global = true)]
    config: Option<String>,
    /// Mixture term `p=beta_sq`; repeatable, replaces the config terms.
    #[arg(long = "term", value_parser = parse_term)]
    terms: Vec<(u32, f64)>,
    /// External field strength.
    #[arg(long)]
    h: Option<f64>,
    /// Disorder correlation between the two systems.
    #[arg(long)]
    t: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $SPHERICAL_CHAOS_OUT or `.`).
    #[arg(short, long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the free-energy functional and emit the optimizer.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest refinement depth to explore.
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Sweep the coupled free-energy gap over a grid of overlaps.
    Chaos {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid spacing in the constrained overlap.
        #[arg(long)]
        u_step: Option<f64>,
    },
    /// Compare the brute-force Gaussian recursion with its closed forms.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of randomized cases.
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Monte Carlo overlap statistics for two coupled systems.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Disorder replicas per system size.
        #[arg(long)]
        replicas: Option<usize>,
        /// Metropolis sweeps per chain.
        #[arg(long)]
        sweeps: Option<usize>,
        /// System sizes (comma-separated).
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
    },
}

fn overrides_from(common: &CommonArgs) -> Overrides {
    Overrides {
        terms: if common.terms.is_empty() { None } else { Some(common.terms.clone()) },
        h: common.h,
        t: common.t,
        seed: common.seed,
        out_dir: common.out.clone(),
        ..Default::default()
    }
}

type Runner = fn(&RunConfig) -> Result<OutputSet, CliError>;

fn execute() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (name, config, runner): (&str, RunConfig, Runner) =
        match &cli.command {
            Command::Solve { common, k_max } => {
                let mut ov = overrides_from(common);
                ov.k_max = *k_max;
                ("solve", RunConfig::load(common.config.as_deref(), &ov)?, run::cmd_solve)
            }
            Command::Chaos { common, u_step } => {
                let mut ov = overrides_from(common);
                ov.u_step = *u_step;
                ("chaos", RunConfig::load(common.config.as_deref(), &ov)?, run::cmd_chaos)
            }
            Command::Oracle { common, cases } => {
                let mut ov = overrides_from(common);
                ov.cases = *cases;
                ("oracle", RunConfig::load(common.config.as_deref(), &ov)?, run::cmd_oracle)
            }
            Command::Simulate { common, replicas, sweeps, n } => {
                let mut ov = overrides_from(common);
                ov.replicas = *replicas;
                ov.sweeps = *sweeps;
                ov.n_list = n.clone();
                ("simulate", RunConfig::load(common.config.as_deref(), &ov)?, run::cmd_simulate)
            }
        };
    let dir = config.resolve_out_dir();
    match runner(&config) {
        Ok(out) => {
            out.write_all(&dir)?;
            eprintln!(
                "{name}: wrote {} into {}",
                out.names().join(", "),
                dir.display()
            );
            Ok(())
        }
        Err(CliError::NumericalWithOutput(msg, out)) => {
            out.write_all(&dir)?;
            Err(CliError::Numerical(msg))
        }
        Err(e) => Err(e),
    }
}

fn main() {
    match execute() {
        Ok(()) => {}
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Numerical(msg)) | Err(CliError::NumericalWithOutput(msg, _)) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}
