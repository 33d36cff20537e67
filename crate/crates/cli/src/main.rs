//! `decaylab` — simulate, sweep, verify, fit, and report on superlinearly
//! damped second-order systems.
//!
//! Exit codes: 0 success, 1 runtime/config error, 2 certificate violation
//! (when the config enables `fail_on_violation`). Diagnostics go to
//! stderr; data goes to files only.

use clap::{Args, Parser, Subcommand};
use decaylab::certificates::fit_power_law;
use decaylab::harness::{render_report, run_experiment, ExperimentKind, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "decaylab", version, about = "energy bound/decay laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Config file (`key = value` lines, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set alpha=1.5`; repeatable,
    /// last writer wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides the config's `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config's `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep cells (overrides the config's `jobs`).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write its certificate report.
    Simulate(RunArgs),
    /// Run an amplitude sweep probing universality.
    Sweep(RunArgs),
    /// Check the assumption inequalities on random states.
    VerifyAssumptions(RunArgs),
    /// Fit a power-law exponent to the `t, E0` columns of a CSV file.
    FitDecay {
        /// CSV file with `t` in the first column and `E0` in the second.
        #[arg(long)]
        input: PathBuf,
        /// Fit window `lo,hi` in time.
        #[arg(long, default_value = "10,1000")]
        window: String,
    },
    /// Render an existing run directory into a readable summary.
    Report {
        /// Run directory containing `manifest.json`.
        dir: PathBuf,
    },
}

fn load_config(args: &RunArgs, experiment: ExperimentKind) -> Result<RunConfig, decaylab::Error> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    config.experiment = experiment;
    for pair in &args.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            decaylab::Error::Config(format!("--set expects KEY=VALUE, got `{pair}`"))
        })?;
        config.apply(key, value)?;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &RunArgs, experiment: ExperimentKind) -> ExitCode {
    let config = match load_config(args, experiment) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let fail_on_violation = config.fail_on_violation;
    match run_experiment(&config) {
        Ok(outcome) => {
            eprintln!("run written to {}", outcome.out_dir.display());
            for (key, value) in &outcome.manifest.verdicts {
                eprintln!("  {key}: {value}");
            }
            if outcome.violations && fail_on_violation {
                eprintln!("certificate violation recorded");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn fit_decay(input: &PathBuf, window: &str) -> ExitCode {
    let parse = || -> Result<(), String> {
        let (lo, hi) = window
            .split_once(',')
            .ok_or_else(|| "window must be `lo,hi`".to_string())?;
        let lo: f64 = lo.trim().parse().map_err(|_| "bad window lower bound")?;
        let hi: f64 = hi.trim().parse().map_err(|_| "bad window upper bound")?;
        let text = std::fs::read_to_string(input)
            .map_err(|e| format!("cannot read {}: {e}", input.display()))?;
        let mut ts = Vec::new();
        let mut es = Vec::new();
        for line in text.lines().skip(1) {
            let mut cols = line.split(',');
            let (Some(t), Some(e)) = (cols.next(), cols.next()) else {
                continue;
            };
            if let (Ok(t), Ok(e)) = (t.trim().parse::<f64>(), e.trim().parse::<f64>()) {
                ts.push(t);
                es.push(e);
            }
        }
        let fit = fit_power_law(&ts, &es, (lo, hi)).map_err(|e| format!("{e}"))?;
        println!(
            "slope {} stderr {} samples {}",
            fit.slope, fit.stderr, fit.samples
        );
        Ok(())
    };
    match parse() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(args) => run(args, ExperimentKind::Simulate),
        Command::Sweep(args) => run(args, ExperimentKind::Sweep),
        Command::VerifyAssumptions(args) => run(args, ExperimentKind::VerifyAssumptions),
        Command::FitDecay { input, window } => fit_decay(input, window),
        Command::Report { dir } => match render_report(dir) {
            Ok(summary) => {
                println!("{summary}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
