use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use jrc_bandit::harness::{emit_csv, run_experiment, run_sweep, ExperimentConfig};
use jrc_bandit::radar_rx::calibrate_scale;
use jrc_bandit::Algorithm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "jrc-bandit", version, about = "Radar-gated bandit beam selection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trace.csv and summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated algorithm names (ucb, ucb-ag, ucb-dg, random, lucb, dbf).
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
    },
    /// Run the experiment once per value of the config's [sweep] section.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the OS-CFAR scale for a target false-alarm rate on pure noise.
    CalibrateCfar {
        #[arg(long)]
        pfa: f64,
        /// Number of noise cells (accepts 1e6 style values).
        #[arg(long)]
        cells: f64,
        /// Packets integrated per cell.
        #[arg(long, default_value_t = 1)]
        packets: usize,
        #[arg(long, default_value_t = 16)]
        training: usize,
        #[arg(long, default_value_t = 2)]
        guard: usize,
        #[arg(long, default_value_t = 12)]
        rank: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>> {
    names
        .iter()
        .map(|n| n.parse::<Algorithm>().map_err(Into::into))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            algorithms,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(names) = algorithms {
                cfg.algorithms = parse_algorithms(&names)?;
            }
            let result = run_experiment(&cfg)?;
            emit_csv(std::slice::from_ref(&result), &out)?;
            for row in &result.rows {
                println!(
                    "{:<8} throughput {:>12.1} +- {:<10.1} regret {:>10.3} +- {:.3}",
                    row.algorithm.name(),
                    row.mean_throughput_bps,
                    row.se_throughput,
                    row.mean_regret,
                    row.se_regret
                );
            }
        }
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            if cfg.sweep.is_none() {
                bail!("{} has no [sweep] section", config.display());
            }
            let results = run_sweep(&cfg)?;
            emit_csv(&results, &out)?;
            for r in &results {
                for row in &r.rows {
                    println!(
                        "{:<8} {:<8} throughput {:>12.1} +- {:.1}",
                        r.sweep_value.map_or(String::new(), |v| v.to_string()),
                        row.algorithm.name(),
                        row.mean_throughput_bps,
                        row.se_throughput
                    );
                }
            }
        }
        Command::CalibrateCfar {
            pfa,
            cells,
            packets,
            training,
            guard,
            rank,
            seed,
        } => {
            if !(cells >= 1.0 && cells.fract() == 0.0) {
                bail!("--cells must be a positive integer, got {cells}");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = calibrate_scale(pfa, cells as usize, training, guard, rank, packets, &mut rng)
                .context("calibration failed")?;
            println!("{scale}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
