use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pftsim::config::{ExperimentConfig, ExperimentKind};
use pftsim::error::PftError;
use pftsim::experiments::{run_check_battery, run_experiment, EXPERIMENTS};

#[derive(Parser)]
#[command(name = "pftsim", version, about = "scalar-field dynamics relative to spacelike hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment from a JSON config
    Run {
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides config output_dir; default ".")
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (fallback: PFTSIM_THREADS, then 1)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the cross-module invariant battery
    Check {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List available experiments
    ListExperiments {
        #[arg(long)]
        json: bool,
    },
}

fn thread_count(cli_threads: Option<usize>) -> usize {
    cli_threads
        .or_else(|| {
            std::env::var("PFTSIM_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(1)
        .max(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                PftError::ConfigError(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<bool, PftError> {
    match cli.command {
        Command::Run { experiment, config, out, threads } => {
            let kind = ExperimentKind::parse(&experiment)?;
            let cfg = ExperimentConfig::from_file(&config)?;
            if cfg.experiment != kind {
                return Err(PftError::ConfigError(format!(
                    "config declares experiment '{}', command line says '{}'",
                    cfg.experiment.name(),
                    experiment
                )));
            }
            let out_dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            let manifest = run_experiment(&cfg, &out_dir, thread_count(threads))?;
            for c in &manifest.checks {
                println!(
                    "[{}] {}: {:.3e} (threshold {:.3e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.magnitude,
                    c.threshold
                );
            }
            if let Some(err) = &manifest.error {
                eprintln!("experiment error: {err}");
            }
            println!(
                "{}: {} ({} ms), manifest in {}",
                manifest.experiment,
                if manifest.passed { "PASS" } else { "FAIL" },
                manifest.wall_time_ms,
                out_dir.display()
            );
            Ok(manifest.passed)
        }
        Command::Check { out, threads } => {
            let _ = thread_count(threads);
            let checks = run_check_battery(0)?;
            let passed = checks.iter().all(|c| c.passed);
            for c in &checks {
                println!(
                    "[{}] {}: {:.3e} (threshold {:.3e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.magnitude,
                    c.threshold
                );
            }
            let summary = serde_json::json!({
                "version": pftsim::VERSION,
                "checks": checks,
                "passed": passed,
            });
            let text = serde_json::to_string_pretty(&summary)
                .map_err(|e| PftError::ExperimentError(e.to_string()))?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("check_summary.json"), &text)?;
            } else {
                println!("{text}");
            }
            Ok(passed)
        }
        Command::ListExperiments { json } => {
            if json {
                let list: Vec<_> = EXPERIMENTS
                    .iter()
                    .map(|(n, d)| serde_json::json!({"name": n, "description": d}))
                    .collect();
                println!(
                    "{}",
                    serde_json::to_string_pretty(&list)
                        .map_err(|e| PftError::ExperimentError(e.to_string()))?
                );
            } else {
                for (n, d) in EXPERIMENTS {
                    println!("{n:24} {d}");
                }
            }
            Ok(true)
        }
    }
}
