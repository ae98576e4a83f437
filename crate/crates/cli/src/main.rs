//! `ks-stab`: runs stabilization experiments and writes reproducible artifacts.

mod artifacts;
mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, CliResult};
use config::{Kind, RawConfig};

#[derive(Parser, Debug)]
#[command(name = "ks-stab", version, about = "Boundary stabilization experiments for the Kuramoto-Sivashinsky equation")]
struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named acceptance run (ac1 .. ac9, or all).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (default `ks-out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Seed for randomized initial data.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check (λ, a, ν) admissibility.
    Validate,
    /// Assemble the kernel and report its residuals.
    Kernel,
    /// Discretize the Fredholm transform and report its conditioning.
    Transform,
    /// Closed-loop simulation with trace, summary and decay plot.
    Simulate,
    /// Controllability diagnostics at λ.
    Diagnose,
    /// Closed-loop runs over a λ × a grid, in parallel.
    Sweep,
    /// Semi-log decay plot of a trace CSV.
    Plot {
        trace: PathBuf,
        /// Envelope rate; defaults to the fitted decay rate.
        #[arg(long)]
        nu: Option<f64>,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::new("io_error", format!("{}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for pair in &cli.set {
        raw.set_pair(pair)?;
    }
    if let Some(seed) = cli.seed {
        raw.set("seed", &seed.to_string()).map_err(|e| CliError::new("schema_error", e))?;
    }
    let cfg = raw.resolve()?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.out.clone());

    if let Some(preset) = &cli.preset {
        if cli.command.is_some() {
            return Err(CliError::new("parameter_rejection", "--preset cannot be combined with a subcommand"));
        }
        return commands::run_preset(preset, &out, cfg.seed);
    }
    let kind = match cli.command {
        Some(Command::Plot { trace, nu }) => return commands::run_plot(&trace, nu, &out, cfg.seed),
        Some(Command::Validate) => Kind::Validate,
        Some(Command::Kernel) => Kind::Kernel,
        Some(Command::Transform) => Kind::Transform,
        Some(Command::Simulate) => Kind::Simulate,
        Some(Command::Diagnose) => Kind::Diagnose,
        Some(Command::Sweep) => Kind::Sweep,
        None => cfg.kind.ok_or_else(|| {
            CliError::new("parameter_rejection", "no experiment: give a subcommand, `kind` in the config, or --preset")
        })?,
    };
    if kind == Kind::Sweep {
        if let Some(jobs) = cli.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build_global()
                .map_err(|e| CliError::new("io_error", e.to_string()))?;
        }
    }
    commands::run(&cfg, kind, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
