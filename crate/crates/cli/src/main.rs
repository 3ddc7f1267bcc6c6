//! `wkb`: runs scenario documents through the experiments of `wkb-core`
//! and writes CSV tables, JSON reports and binary snapshots.
//!
//! Exit status: 0 on success, 1 when the run fails or an assertion
//! (`--assert-order`, the integer-lattice divisor bound) does not hold, 2 on
//! usage or scenario parse errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wkb_core::experiments::{run, Command, Oracle, RunOptions};
use wkb_core::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "wkb", version, about = "Multiphase WKB experiments for the semiclassical NLS")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Close the initial wave vectors under resonant interactions.
    Closure(Common),
    /// Integrate the amplitude system, optionally against a closed form.
    Profiles {
        #[command(flatten)]
        common: Common,
        /// Closed form to compare with: explicit_torus_1d, explicit_two_mode
        /// or explicit_euclid_1d.
        #[arg(long)]
        oracle: Option<Oracle>,
    },
    /// Measure the WKB error against the spectral solver over an ε sweep.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Exit with status 1 if the fitted sup-norm order is below this.
        #[arg(long, value_name = "P")]
        assert_order: Option<f64>,
    },
    /// Evaluate the two-mode instability gap.
    Instability(Common),
    /// Survey small divisors and run the optional Gram probe.
    Smalldiv(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario document (JSON).
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "wkb-out")]
    out: PathBuf,
    /// Worker threads for sweep rows.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Accepted for compatibility; every computation is deterministic.
    #[arg(long)]
    seedless: bool,
}

fn load(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Scenario::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, common, oracle, assert_order) = match cli.command {
        Cmd::Closure(c) => (Command::Closure, c, None, None),
        Cmd::Profiles { common, oracle } => (Command::Profiles, common, oracle, None),
        Cmd::Converge { common, assert_order } => (Command::Converge, common, None, assert_order),
        Cmd::Instability(c) => (Command::Instability, c, None, None),
        Cmd::Smalldiv(c) => (Command::Smalldiv, c, None, None),
    };
    let scenario = match load(&common.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        jobs: usize::from(common.jobs),
        oracle,
        assert_order,
    };
    let output = match run(command, &scenario, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = output.write_to(&common.out) {
        eprintln!("error: writing {}: {e}", common.out.display());
        return ExitCode::from(1);
    }
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    for line in &output.summary {
        println!("{line}");
    }
    println!("scenario {}", scenario.hash());
    println!("wrote {} files to {}", output.artifacts.len(), common.out.display());
    if output.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &output.failures {
            eprintln!("assertion failed: {f}");
        }
        ExitCode::from(1)
    }
}
