use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use d2d_core::harness::{
    load_config, oracle_check, run_experiment, ExperimentConfig, ExperimentKind, HarnessError,
};

#[derive(Parser)]
#[command(name = "d2dsim", version, about = "D2D underlay simulator and allocator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every allocator against the exhaustive references.
    OracleCheck {
        /// Largest number of states an exhaustive search may visit.
        #[arg(long, default_value_t = 2_000_000)]
        budget: usize,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the default config for an experiment.
    PrintDefaults {
        #[arg(long, default_value = "sumrate-vs-pairs")]
        experiment: String,
    },
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> ExitCode {
    let mut cfg = match load_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    print!("{}", cfg.to_toml());
    match run_experiment(&cfg) {
        Ok(output) => {
            eprintln!(
                "wrote {} in {:.2}s",
                cfg.output_dir.join(output.file_name).display(),
                output.summary.wall_clock_s
            );
            for g in &output.summary.groups {
                match g.stats {
                    Some(s) => eprintln!("{:>6} {:<16} mean {:.4} sd {:.4} n {}", g.key, g.scheme, s.mean, s.stddev, s.count),
                    None => eprintln!("{:>6} {:<16} empty ({} errors)", g.key, g.scheme, g.errors),
                }
            }
            match output.check {
                Some(report) if !report.passed() => ExitCode::from(3),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(HarnessError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, seed, out } => run(config, seed, out),
        Command::OracleCheck { budget, instances, seed } => {
            let mut cfg = ExperimentConfig::for_experiment(ExperimentKind::OracleCheck);
            cfg.oracle.max_assignments = budget;
            if budget == 0 {
                eprintln!("error: budget must be >= 1");
                return ExitCode::from(2);
            }
            let report = oracle_check(seed, instances, &cfg.oracle);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Command::PrintDefaults { experiment } => {
            match ExperimentKind::ALL.iter().find(|k| k.name() == experiment) {
                Some(&kind) => {
                    print!("{}", ExperimentConfig::for_experiment(kind).to_toml());
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("error: unknown experiment {experiment}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
