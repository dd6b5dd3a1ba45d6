// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinscale::analyze::{analyze, Model};
use spinscale::error::{CliError, CliResult};
use spinscale::{plotdata, run, sequences, verify, ExperimentConfig, RunOptions, WORKERS_ENV};
use spinscale_core::sequence::{Direction, SequenceKind, SequenceSpec};

#[derive(Parser)]
#[command(name = "spinscale", version, about = "Scaled dipolar spin dynamics: sweeps, fits and figure tables")]
struct Cli {
    /// Output (and results) directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to every core.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Override the system seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the sweep described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Recompute cells even when cached.
        #[arg(long)]
        force: bool,
    },
    /// Fit models to stored results and write fits/<model>.json.
    Analyze {
        /// Results directory; defaults to --out.
        results: Option<PathBuf>,
        /// Comma-separated models; all applicable ones when omitted.
        #[arg(long, value_delimiter = ',')]
        model: Vec<Model>,
    },
    /// Write plot-ready CSV tables into <results>/plots.
    Plotdata { results: Option<PathBuf> },
    /// List, search or extend the sequence registry.
    Sequences {
        #[command(subcommand)]
        action: SequencesAction,
    },
    /// Run the acceptance checks.
    Verify {
        /// Only these criteria (1-10).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Subcommand)]
enum SequencesAction {
    /// Print every record of a registry file.
    List {
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Enumerate 8-pulse phase patterns that realize the scaled Hamiltonian.
    Search {
        #[arg(long, value_parser = parse_direction, default_value = "forward")]
        direction: Direction,
        /// Keep patterns whose 16-pulse extension cancels first-order terms.
        #[arg(long)]
        first_order: bool,
    },
    /// Build, verify and append one sequence to a registry.
    Register {
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long, value_parser = parse_kind, default_value = "p8")]
        kind: SequenceKind,
        #[arg(long)]
        delta: f64,
        /// Seconds.
        #[arg(long)]
        tau: f64,
        #[arg(long, value_parser = parse_direction, default_value = "forward")]
        direction: Direction,
    },
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown direction `{s}`"))
}

fn parse_kind(s: &str) -> Result<SequenceKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown sequence kind `{s}`"))
}

fn results_dir(explicit: Option<PathBuf>, out: &Option<PathBuf>) -> PathBuf {
    explicit.or_else(|| out.clone()).unwrap_or_else(|| PathBuf::from("results"))
}

fn registry_path(explicit: Option<PathBuf>, out: &Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| out.as_deref().unwrap_or(Path::new(".")).join("sequences.json"))
}

/// `println!` that stops quietly once stdout is closed, e.g. piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            return Ok(ExitCode::SUCCESS);
        }
    };
}

fn execute(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Run { config, force } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let opts = RunOptions { force, workers: cli.workers, seed: cli.seed };
            let record = run::run(&cfg, &out, &opts)?;
            let cached = record.cells.iter().filter(|c| c.cached).count();
            say!("config {} -> {}", record.config_hash, out.display());
            say!("{} cells ({} cached) in {:.2} s", record.cells.len(), cached, record.wall_clock_s);
            for c in &record.cells {
                say!("  {}", out.join(&c.curves_csv).display());
            }
            if let Some(col) = &record.collapse {
                say!("collapse of {}: max spread {:.3e}, mean {:.3e}", col.curve, col.max_spread, col.mean_spread);
            }
        }
        Command::Analyze { results, model } => {
            let dir = results_dir(results, &cli.out);
            let done = if model.is_empty() {
                let mut done = Vec::new();
                for m in Model::ALL {
                    match analyze(&dir, &[m]) {
                        Ok(mut v) => done.append(&mut v),
                        Err(CliError::NoMatch(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                if done.is_empty() {
                    return Err(CliError::NoMatch("any model".into()));
                }
                done
            } else {
                analyze(&dir, &model)?
            };
            for (m, path, fits) in done {
                say!("{m}: {} fits, {} skipped -> {}", fits.fits.len(), fits.skipped.len(), path.display());
            }
        }
        Command::Plotdata { results } => {
            for p in plotdata::plotdata(&results_dir(results, &cli.out))? {
                say!("{}", p.display());
            }
        }
        Command::Sequences { action } => match action {
            SequencesAction::List { registry } => {
                let path = registry_path(registry, &cli.out);
                let records = sequences::list(&path)?;
                say!("{} records in {}", records.len(), path.display());
                for r in records {
                    say!(
                        "{:?} {:?} delta={} tau={:e} s  phases: {}  hash {}",
                        r.kind,
                        r.direction,
                        r.delta + 0.0,
                        r.tau,
                        r.phases.iter().map(|p| p.label()).collect::<Vec<_>>().join(" "),
                        &r.verification.sequence_hash[..12]
                    );
                }
            }
            SequencesAction::Search { direction, first_order } => {
                let hits = sequences::search(direction, first_order)?;
                say!("{} patterns", hits.len());
                for h in hits {
                    say!("{}", sequences::pattern_label(&h));
                }
            }
            SequencesAction::Register { registry, kind, delta, tau, direction } => {
                let path = registry_path(registry, &cli.out);
                let (record, added) = sequences::register(&path, &SequenceSpec::new(kind, delta, tau, direction))?;
                say!(
                    "{} {} in {}",
                    if added { "registered" } else { "already present:" },
                    record.verification.sequence_hash,
                    path.display()
                );
            }
        },
        Command::Verify { only } => {
            let ids: Vec<u8> = if only.is_empty() { (1..=10).collect() } else { only };
            if let Some(bad) = ids.iter().find(|i| !(1..=10).contains(*i)) {
                return Err(CliError::validation("--only", format!("criterion {bad} does not exist")));
            }
            let mut failed = 0;
            for id in ids {
                let o = verify::run_criterion(id, &verify::in_process_runner);
                say!("{}", o.line());
                failed += usize::from(!o.passed);
            }
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
