//! Command-line driver: verification suites, semiclassical sweeps, and
//! closed-form tables, all emitting machine-readable reports.

// Validation guards are written `!(x > 0.0)` so NaN inputs fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;
mod sweep;
mod table;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use report::write_json;

#[derive(Parser)]
#[command(name = "cohq")]
#[command(about = "Coherent-state and Berezin-Toeplitz identity verification on model geometries")]
#[command(version)]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite for one geometry and level; writes
    /// report.json and conventions.json, exits nonzero on any failure.
    Verify,
    /// Run a semiclassical k-sweep; writes CSV, slope JSON, and a
    /// plot-ready two-column file.
    Sweep {
        /// delta | concentration | berezin
        #[arg(long)]
        test: String,
        /// Observable name (see `one`, `height`, `real`, `cos-u`, `gauss`, `bump-v`)
        #[arg(long, default_value = "height")]
        observable: String,
    },
    /// Emit a closed-form quantity table (text + CSV twin).
    Table {
        /// eps | dk | toeplitz-spectrum
        #[arg(long)]
        target: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::load(cli.config.as_ref(), &cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cli.command, &cfg) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: &Command, cfg: &RunConfig) -> anyhow::Result<bool> {
    match command {
        Command::Verify => {
            let out = verify::run_verify(cfg)?;
            let report = out.report;
            std::fs::create_dir_all(&cfg.out)?;
            let report_path = cfg.out.join(format!("report_{}.json", cfg.geometry));
            let conventions_path = cfg.out.join("conventions.json");
            write_json(&report_path, &report)?;
            write_json(&conventions_path, &report.conventions)?;
            if let Some(basis) = &out.basis {
                write_json(&cfg.out.join(format!("basis_{}.json", cfg.geometry)), basis)?;
            }
            if let Some(op) = &out.operator {
                write_json(&cfg.out.join(format!("operator_{}.json", cfg.geometry)), op)?;
            }
            for t in &report.tests {
                println!(
                    "{:<22} {}  value {:.3e}  tolerance {:.1e}  ({} ms)",
                    t.name, t.status, t.value, t.tolerance, t.runtime_ms
                );
            }
            println!(
                "verify {}: {} -> {}",
                cfg.geometry,
                report.overall,
                report_path.display()
            );
            Ok(report.all_passed())
        }
        Command::Sweep { test, observable } => {
            let out = sweep::run_sweep(cfg, test, observable)?;
            println!(
                "sweep {} {}: slope {:.4} (residual {:.2e}) over k = {:?}",
                cfg.geometry, test, out.result.fitted_slope, out.result.fit_residual,
                out.result.k_values
            );
            println!(
                "wrote {}, {}, {}",
                out.csv_path.display(),
                out.json_path.display(),
                out.plot_path.display()
            );
            Ok(true)
        }
        Command::Table { target } => {
            let out = table::run_table(cfg, target)?;
            println!("wrote {} and {}", out.text_path.display(), out.csv_path.display());
            Ok(true)
        }
    }
}
