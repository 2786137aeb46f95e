use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aerotorch_core::sim::{
    run_batch, run_scenario_with, write_csv, BaseMode, RunOptions, ScenarioConfig, SimError, TelemetrySummary,
};
use aerotorch_core::task::FireMode;
use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "aerotorch", version, about = "Aerial manipulator torch-lighting simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    Fixed,
    Floating,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fire {
    Get,
    Make,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write telemetry, summary and metrics.
    Run {
        /// Scenario JSON; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        base: Option<Base>,
        #[arg(long)]
        fire: Option<Fire>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Keep every n-th physics tick in the CSV (0 writes no CSV).
        #[arg(long, default_value_t = 1)]
        decimate: usize,
    },
    /// Run the fixed/floating x get/make success-rate grid.
    Batch {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Runs per cell.
        #[arg(long, default_value_t = 20)]
        runs: usize,
        /// First seed; cell runs use consecutive seeds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Validate a scenario file.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: Option<&Path>) -> Result<ScenarioConfig, SimError> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| SimError::ConfigInvalid(format!("{}: {e}", p.display())))?;
            ScenarioConfig::from_json(&text)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Check { config } => {
            let cfg = load(Some(&config))?;
            println!("{}: ok (schema {}, seed {})", config.display(), cfg.schema_version, cfg.seed);
            Ok(0)
        }
        Command::Run { config, seed, base, fire, out, decimate } => {
            let mut cfg = load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(b) = base {
                cfg.base = match b {
                    Base::Fixed => BaseMode::Fixed,
                    Base::Floating => BaseMode::Floating,
                };
            }
            if let Some(f) = fire {
                cfg.fire = match f {
                    Fire::Get => FireMode::GetFire,
                    Fire::Make => FireMode::MakeFire,
                };
            }
            let output = run_scenario_with(&cfg, &RunOptions { record_every: decimate })?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            if decimate > 0 {
                let file = fs::File::create(out.join("telemetry.csv")).context("creating telemetry.csv")?;
                write_csv(&output.records, std::io::BufWriter::new(file))?;
                if let Ok(summary) = TelemetrySummary::from_records(&output.records) {
                    fs::write(out.join("summary.txt"), summary.to_string())?;
                    print!("{summary}");
                }
            }
            let m = &output.metrics;
            fs::write(out.join("metrics.json"), serde_json::to_string_pretty(m)?)?;
            println!(
                "seed {}: {:?}, final state {}, time to light {}",
                m.seed,
                m.outcome,
                m.final_state.name(),
                m.time_to_light.map_or("-".into(), |t| format!("{t:.2} s")),
            );
            if let Some(d) = &m.diagnostic {
                eprintln!("diagnostic: {d}");
            }
            Ok(m.outcome.exit_code() as u8)
        }
        Command::Batch { config, runs, seed, out } => {
            let cfg = load(config.as_deref())?;
            let table = run_batch(&cfg, runs, seed)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            fs::write(out.join("batch.json"), serde_json::to_string_pretty(&table)?)?;
            print!("{table}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = matches!(e.downcast_ref::<SimError>(), Some(SimError::ConfigInvalid(_)));
            ExitCode::from(if config_error { EXIT_CONFIG } else { 1 })
        }
    }
}
