#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biphoton_cli::compare::compare_files;
use biphoton_cli::presets::{find, PRESETS};
use biphoton_cli::{run_scenario, CliError, RunSummary, Scenario, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "biphoton", version, about = "Two-photon spectral amplitude scenarios: delay distributions, tilt and entanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config and $BIPHOTON_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two distribution CSV files; `b` is the reference.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Largest allowed deviation of the peak-normalized curves.
        #[arg(long)]
        tol: f64,
    },
    /// Bundled reference scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Run {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset's scenario file.
    Show { name: String },
}

fn out_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

fn print_summary(s: &RunSummary) {
    for f in &s.files {
        println!("wrote {}", f.display());
    }
    if let Some(r) = &s.report {
        for line in r.lines().filter(|l| !l.starts_with('#')) {
            println!("{line}");
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let scenario = Scenario::from_file(&config)?;
            print_summary(&run_scenario(&scenario, out_dir(out).as_deref())?);
        }
        Command::Compare { a, b, tol } => {
            let c = compare_files(&a, &b, tol)?;
            println!("ok max_deviation={:.6e} l2_deviation={:.6e} points={}", c.max_deviation, c.l2_deviation, c.points);
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for p in PRESETS {
                    println!("{:<12} {}", p.name, p.scenario()?.description);
                }
            }
            PresetAction::Run { name, out } => {
                let scenario = find(&name)?.scenario()?;
                print_summary(&run_scenario(&scenario, out_dir(out).as_deref())?);
            }
            PresetAction::Show { name } => print!("{}", find(&name)?.source),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg).trim_start_matches("error: ");
            eprintln!("{}", CliError::Config(format!("usage: {first}")).machine_line());
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code())
        }
    }
}
