use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fockrate::config::parse_config;
use fockrate::oracle::verify_closed_forms;
use fockrate::scan::{emit_csv, run_exponent, run_scan};

#[derive(Parser)]
#[command(
    name = "fockrate",
    version,
    about = "Absorption rates of particle wavepackets by a quantum medium"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate rates over the configured positions and write CSV.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare closed-form rates with the explicit Fock-space sum on random trials.
    Verify {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Fit rate exponents against local intensity.
    Exponent {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<fockrate::config::ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.config)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Scan { config, out } => {
            let table = run_scan(&load(&config)?)?;
            match out {
                Some(path) => {
                    let file = fs::File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    emit_csv(&table, io::BufWriter::new(file))?;
                }
                None => emit_csv(&table, io::stdout().lock())?,
            }
            Ok(true)
        }
        Command::Verify { trials, seed, tol } => {
            let report = verify_closed_forms(trials, tol, seed);
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{report}")?;
            Ok(report.passed())
        }
        Command::Exponent { config } => {
            let report = run_exponent(&load(&config)?)?;
            println!("w1_exponent={:.9}", report.first_order);
            if let Some(k) = report.second_order {
                println!("w2_exponent={k:.9}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
