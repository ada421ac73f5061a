//! `ch2`: scenario runner and study driver.

mod config;
mod error;
mod run;
mod scenario;
mod study;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ch2_core::eulerian::check_in_d;
use ch2_core::io::{read_eulerian, read_lagrangian};
use ch2_core::lagrangian::{check_in_g, TOL_CONSTRAINT};
use clap::{Parser, Subcommand};

use config::Config;
use error::CliError;

#[derive(Parser)]
#[command(name = "ch2", version, about = "Conservative two-component Camassa-Holm solutions and metric estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario and write snapshots, diagnostics and a summary.
    Run { config: PathBuf },
    /// Bound the distance between two evolved initial states over time.
    Metric { config: PathBuf },
    /// Compare runs on successively halved grids with the exact solution.
    Converge { config: PathBuf },
    /// Check a state file for membership in its state space.
    Check {
        state: PathBuf,
        #[arg(long, default_value_t = TOL_CONSTRAINT)]
        tol: f64,
    },
}

fn check(path: &Path, tol: f64) -> Result<bool, CliError> {
    let open = || File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())));
    let mut first = String::new();
    BufReader::new(open()?).read_line(&mut first)?;
    let parse = |e: ch2_core::Error| CliError::Config(format!("{}: {e}", path.display()));
    let (report, ok) = if first.contains("\"lagrangian\"") {
        let (x, _) = read_lagrangian(open()?).map_err(parse)?;
        let r = check_in_g(&x, tol).map_err(parse)?;
        let ok = r.in_g;
        (serde_json::to_string_pretty(&r), ok)
    } else {
        let (z, _) = read_eulerian(open()?).map_err(parse)?;
        let r = check_in_d(&z, tol).map_err(parse)?;
        let ok = r.in_d;
        (serde_json::to_string_pretty(&r), ok)
    };
    println!("{}", report.map_err(|e| CliError::Numerical(e.to_string()))?);
    Ok(ok)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config } => {
            let (dir, s) = run::run_scenario(&Config::load(&config)?)?;
            println!(
                "{}: t = {}, energy drift {:.3e}, max residual {:.3e}, min y_xi {:.3e} -> {}",
                s.scenario,
                s.t_reached,
                s.max_relative_energy_drift,
                s.max_lagcoord3_residual,
                s.min_yxi,
                dir.display()
            );
        }
        Command::Metric { config } => {
            let (dir, r) = study::run_metric_study(&Config::load(&config)?)?;
            for e in &r.entries {
                println!("t = {:<8} d in [{:.3e}, {:.3e}]  ratio {:.3}", e.t, e.lower, e.upper, e.ratio);
            }
            println!("max ratio {:.3} (cap {}) -> {}", r.max_ratio, r.cap, dir.display());
        }
        Command::Converge { config } => {
            let (dir, r) = run::run_converge(&Config::load(&config)?)?;
            for l in &r.levels {
                println!("level {} dxi {:.4e} dt {:.4e} sup error {:.4e}", l.level, l.dxi, l.dt, l.sup_error);
            }
            println!("ratios {:?} -> {}", r.ratios, dir.display());
        }
        Command::Check { state, tol } => {
            if !check(&state, tol)? {
                return Err(CliError::Numerical(format!("{} is not in its state space", state.display())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ch2: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
