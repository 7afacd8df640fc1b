use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use onebit_mean::harness::{run_to_files, ExperimentConfig, Scenario};
use onebit_mean::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "onebit-mean", version, about = "One-bit dithered mean estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a built-in scenario or a custom JSON config and write CSV + manifest.
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// fig1..fig5, or custom together with --config.
    #[arg(long)]
    scenario: Option<String>,
    /// Trials per sweep point (default 100, or the config's value).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; the manifest goes to <stem>.manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// JSON experiment config, read for the custom scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig> {
    let scenario: Scenario = match (&args.scenario, &args.config) {
        (Some(s), _) => s.parse()?,
        (None, Some(_)) => Scenario::Custom,
        (None, None) => return Err(Error::Config("pass --scenario, or --config for a custom run".into())),
    };
    let mut cfg = match (scenario, &args.config) {
        (Scenario::Custom, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read --config {}: {e}", path.display())))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            if cfg.scenario != Scenario::Custom {
                return Err(Error::Config(format!(
                    "--config declares scenario {}; use --scenario {} without a config",
                    cfg.scenario, cfg.scenario
                )));
            }
            cfg
        }
        (Scenario::Custom, None) => return Err(Error::Config("--scenario custom requires --config".into())),
        (_, Some(_)) => return Err(Error::Config("--config is only read with --scenario custom".into())),
        (preset, None) => ExperimentConfig::preset(preset)?,
    };
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let outcome = resolve(&args).and_then(|cfg| run_to_files(&cfg, &args.out, args.threads));
    match outcome {
        Ok(rows) => {
            eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
