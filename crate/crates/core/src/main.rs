use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use modadc::harness::{
    self, parse_values, run_experiment1, run_experiment2, run_generic, run_single, sweep,
    sweep_csv, write_json, ExperimentConfig, RunOutput, SweepParam,
};
use modadc::{Error, Result};

/// Blind modulo ADC simulator.
#[derive(Parser)]
#[command(name = "modadc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian MA input with the default system parameters.
    Exp1 {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "out/exp1")]
        out: PathBuf,
    },
    /// Bandlimited input with three narrowband interferers.
    Exp2 {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out/exp2")]
        out: PathBuf,
    },
    /// Run a config file, optionally as a Monte Carlo batch.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Recompute summary.json from the trace and ground truth in DIR.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat a config for several values of one parameter; CSV on stdout.
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long)]
        values: String,
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Exp1 {
            kappa,
            seed,
            n,
            out,
        } => finish(run_experiment1(kappa, seed, n)?, &out),
        Command::Exp2 { seed, out } => finish(run_experiment2(seed)?, &out),
        Command::Run { config, trials } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            let out_dir = cfg.out_dir.clone();
            if cfg.trials == 1 {
                let run = run_single(&cfg)?;
                match out_dir {
                    Some(dir) => finish(run, &dir),
                    None => print_json(&run.summary),
                }
            } else {
                let mc = run_generic(&cfg)?;
                if let Some(dir) = out_dir {
                    std::fs::create_dir_all(&dir)?;
                    write_json(&dir.join("trials.json"), &mc.trials)?;
                    write_json(&dir.join("aggregate.json"), &mc.aggregate)?;
                    cfg.save(&dir.join(harness::CONFIG_ECHO_FILE))?;
                }
                print_json(&mc.aggregate)
            }
        }
        Command::Verify { out } => {
            let report = harness::verify(&out)?;
            emit(&format!(
                "ok: {} rows, {} summary fields match\n",
                report.rows, report.fields
            ))
        }
        Command::Sweep {
            param,
            values,
            config,
        } => {
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            let cfg = ExperimentConfig::load(&config)?;
            let points = sweep(&cfg, param, &values)?;
            emit(&sweep_csv(param, &points))
        }
    }
}

fn finish(run: RunOutput, dir: &Path) -> Result<()> {
    run.write(dir)?;
    print_json(&run.summary)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::State(e.to_string()))?;
    emit(&format!("{text}\n"))
}

/// Writes to stdout; a reader that stops early is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}
