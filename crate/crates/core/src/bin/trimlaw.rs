use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trimlaw_core::expcli::{
    any_pointwise_violation, check_conditions, conditions_text, parse_config, plot_file, run,
    CliError, Overrides, CONDITIONS_FILE, EXIT_ERROR, EXIT_OK, EXIT_VIOLATION,
};
use trimlaw_core::montecarlo::Resources;
use trimlaw_core::trimming::{ConditionReport, Verdict};

/// Trimmed and truncated sums of heavy-tailed samples: hypothesis checks and
/// Monte Carlo runs.
#[derive(Parser)]
#[command(name = "trimlaw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check conditions, simulate and write all outputs.
    Run(RunArgs),
    /// Evaluate the configured conditions only and print the reports.
    Check(CommonArgs),
    /// Render the SVG plots of an aggregate CSV.
    Plot {
        /// aggregate.csv written by `run`.
        aggregate: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    replications: Option<u32>,
    /// Largest allowed checkpoint.
    #[arg(long)]
    nmax: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "TRIMLAW_THREADS")]
    threads: Option<usize>,
    /// Memory budget for in-flight sample paths.
    #[arg(long, env = "TRIMLAW_MEMORY_MB")]
    memory_mb: Option<u64>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("trimlaw: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn exit_for(violation: bool) -> i32 {
    if violation {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn warn(reports: &[ConditionReport], place: &str) {
    for r in reports {
        match r.verdict {
            Verdict::Inconclusive => {
                eprintln!("warning: condition ({}) is inconclusive, see {place}", r.id)
            }
            Verdict::Violated => eprintln!("error: condition ({}) is violated, see {place}", r.id),
            Verdict::Satisfied => {}
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(a) => {
            let overrides = Overrides {
                seed: a.common.seed,
                replications: a.replications,
                n_max: a.nmax,
                out_dir: a.out_dir,
                resources: Resources {
                    threads: a.threads,
                    memory_budget_mb: a.memory_mb,
                },
            };
            let spec = parse_config(&a.common.config, &overrides)?;
            let outcome = run(&spec)?;
            for r in &outcome.reports {
                println!("condition {}: {}", r.id, r.verdict);
            }
            warn(
                &outcome.reports,
                &outcome.out_dir.join(CONDITIONS_FILE).display().to_string(),
            );
            println!("wrote {}", outcome.out_dir.display());
            Ok(exit_for(outcome.pointwise_violation()))
        }
        Command::Check(a) => {
            let overrides = Overrides {
                seed: a.seed,
                ..Default::default()
            };
            let spec = parse_config(&a.config, &overrides)?;
            let reports = check_conditions(&spec)?;
            print!("{}", conditions_text(&reports));
            warn(&reports, "the report above");
            Ok(exit_for(any_pointwise_violation(&reports)))
        }
        Command::Plot { aggregate, out_dir } => {
            for p in plot_file(&aggregate, &out_dir)? {
                println!("wrote {}", p.display());
            }
            Ok(EXIT_OK)
        }
    }
}
