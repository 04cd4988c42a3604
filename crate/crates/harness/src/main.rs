use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chansel_harness::config::ExperimentConfig;
use chansel_harness::error::Result;
use chansel_harness::{cmd_run, scaling, sweep, table1};

#[derive(Debug, Parser)]
#[command(name = "chansel", version, about = "Bandit channel selection for remote state estimation")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config and write per-policy and summary CSVs.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay the published regret table.
    Table1 {
        /// Comma-separated row numbers (1 to 9).
        #[arg(long, value_delimiter = ',', default_values_t = (1..=9).collect::<Vec<usize>>())]
        rows: Vec<usize>,
        #[arg(long, default_value_t = table1::DEFAULT_RUNS)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out/table1")]
        out: PathBuf,
    },
    /// Run ε-greedy at each ε and compare against the analytic stability bound.
    EpsilonSweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cumulative regret at increasing horizons plus a scaling classification.
    Scaling {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    match cli.command {
        Command::Run { config, seed } => {
            let config = load(&config, seed)?;
            let (outcome, _) = cmd_run(&config, threads)?;
            println!("policy,regret_T,stderr_T,diverged_runs,scaling_class");
            for p in &outcome.policies {
                println!(
                    "{},{:.3},{:.3},{},{}",
                    p.spec.kind().label(),
                    p.report.final_regret(),
                    p.report.final_stderr(),
                    p.report.diverged_runs,
                    p.scaling.class
                );
            }
            println!("wrote {}", config.output_path.display());
        }
        Command::Table1 {
            rows,
            runs,
            seed,
            out,
        } => {
            let outcomes = table1::cmd_table1(&rows, runs, seed, &out, threads)?;
            println!("row,policy,published,measured,stderr");
            for o in &outcomes {
                for (p, published) in o.outcome.policies.iter().zip(o.row.published) {
                    println!(
                        "{},{},{published},{:.1},{:.1}",
                        o.row.number,
                        p.spec.kind().label(),
                        p.report.final_regret(),
                        p.report.final_stderr()
                    );
                }
            }
            println!("wrote {}", out.join("table1.csv").display());
        }
        Command::EpsilonSweep {
            config,
            epsilons,
            seed,
        } => {
            let config = load(&config, seed)?;
            let points = sweep::cmd_epsilon_sweep(&config, &epsilons, threads)?;
            println!("epsilon,analytic,simulated,diverged_fraction");
            for p in &points {
                println!(
                    "{},{},{},{}",
                    p.epsilon,
                    p.analytic.label(),
                    p.simulated.label(),
                    p.diverged_fraction
                );
            }
            if let Some(p) = points.first() {
                println!("bound {:.4}", p.bound);
            }
        }
        Command::Scaling {
            config,
            horizons,
            seed,
        } => {
            let config = load(&config, seed)?;
            let outcome = scaling::cmd_scaling(&config, &horizons, threads)?;
            for p in &outcome.policies {
                println!("{},{}", p.spec.kind().label(), p.scaling.class);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
