use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ppath::config::{parse_config, RawConfig, RunConfig};
use ppath::run::{run_single, run_sweep, Stage};

/// Parametrized-path vacuum decay: reduction, instantons and real-time evolution.
#[derive(Debug, Parser)]
#[command(name = "ppath", version)]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override a configuration key, e.g. `--override gamma=1e-6` (repeatable).
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate K(R), U(R) and the barrier (reduced.csv, meta.json).
    Reduce,
    /// Field-theoretic and reduced bounces (bounce.csv, reduced.csv, meta.json).
    Instanton,
    /// Full pipeline with real-time evolution (trace.csv, reduced.csv, bounce.csv, meta.json).
    Evolve,
    /// (lambda, eta) sweep of the full pipeline (sweep.csv, meta.json).
    Sweep,
    /// Two-component condensate run (forces system = cold-atom).
    Coldatom,
}

fn load(cli: &Cli, extra: &[&str]) -> ppath::Result<RunConfig> {
    let mut overrides = cli.overrides.clone();
    overrides.extend(extra.iter().map(|s| s.to_string()));
    match &cli.config {
        Some(path) => parse_config(path, &overrides),
        None => {
            let mut raw = RawConfig::default();
            for o in &overrides {
                raw.apply_override(o)?;
            }
            raw.resolve()
        }
    }
}

fn run(cli: &Cli) -> ppath::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| ppath::Error::InvalidInput(e.to_string()))?;
    }
    let (stage, name, extra): (Option<Stage>, &str, &[&str]) = match cli.command {
        Command::Reduce => (Some(Stage::Reduce), "reduce", &[]),
        Command::Instanton => (Some(Stage::Instanton), "instanton", &[]),
        Command::Evolve => (Some(Stage::Evolve), "evolve", &[]),
        Command::Sweep => (None, "sweep", &[]),
        Command::Coldatom => (Some(Stage::Evolve), "coldatom", &["system=cold-atom"]),
    };
    let cfg = load(cli, extra)?;
    match stage {
        Some(stage) => {
            let result = run_single(&cfg, stage, name, &cli.out)?;
            let s = &result.summary;
            println!("wrote {} to {}", s.files.join(", "), cli.out.display());
            if let Some(g) = s.gamma_plateau {
                println!("plateau Gamma = {g:.6e}");
            }
            if let Some(st) = s.statistic {
                println!("statistic = {st:.4}");
            }
        }
        None => {
            let sweep = run_sweep(&cfg)?;
            sweep.write(&cli.out)?;
            let failed = sweep.rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "wrote sweep.csv ({} points, {failed} failed) to {}",
                sweep.rows.len(),
                cli.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
