use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kalman_mi_cli::{cmd_filter, cmd_simulate, cmd_verify, verification_outcome, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "kfmi",
    version,
    about = "Kalman filtering and mutual-information gain checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a truth/measurement trajectory from a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the filter over a trajectory and write the per-step trace.
    Filter {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the verification suite and write a JSON report.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// NAME=VALUE, repeatable.
        #[arg(long = "tol")]
        tol: Vec<String>,
        #[arg(long, default_value = "verify_report.json")]
        report: PathBuf,
        /// Run the checks on separate threads.
        #[arg(long)]
        parallel: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            cmd_simulate(&config, &out, seed)?;
            println!("wrote {}", out.display());
        }
        Command::Filter {
            config,
            trajectory,
            out,
        } => {
            let s = cmd_filter(&config, &trajectory, &out)?;
            println!(
                "steps {}  cumulative MI {:.6} nats ({:.6} bits)  mean NEES {:.4}",
                s.steps, s.cumulative_mi_nats, s.cumulative_mi_bits, s.mean_nees
            );
        }
        Command::Verify {
            trials,
            seed,
            tol,
            report,
            parallel,
        } => {
            let r = cmd_verify(trials, seed, &tol, &report, parallel)?;
            for c in &r.checks {
                println!(
                    "{:<4} {:<18} n={:<4} max_error={:.3e} tol={:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.check_name,
                    c.instances_run,
                    c.max_error,
                    c.tolerance
                );
            }
            println!("report: {}", report.display());
            verification_outcome(&r)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kfmi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
