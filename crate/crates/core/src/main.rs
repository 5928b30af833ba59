use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use safe_rpg::envs::EnvKind;
use safe_rpg::harness::{self, Algorithm, ExperimentConfig, Suite};
use safe_rpg::Error;

#[derive(Parser)]
#[command(name = "safe-rpg", version, about = "Safe policy-gradient experiments on CBF-constrained action sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every replication of a config and write CSV/JSON metrics.
    Run {
        config: PathBuf,
        /// Base seed; replication i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Run an oracle suite: estq, scores, maxrect, invariance, normalization.
    Verify { suite: String },
    /// Print the full default config for an environment and algorithm.
    PrintConfig { env: String, algorithm: String },
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn failure(e: Error) -> ExitCode {
    match e {
        Error::InvalidConfig(_) => usage(e),
        e => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::PrintConfig { env, algorithm } => {
            let env: EnvKind = match env.parse() {
                Ok(e) => e,
                Err(m) => return usage(m),
            };
            let alg: Algorithm = match algorithm.parse() {
                Ok(a) => a,
                Err(m) => return usage(m),
            };
            print!("{}", ExperimentConfig::defaults(env, alg).to_toml_string());
            ExitCode::SUCCESS
        }
        Command::Verify { suite } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(m) => return usage(m),
            };
            let checks = match harness::verify(suite) {
                Ok(c) => c,
                Err(e) => return failure(e),
            };
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag}  {:width$}  {}", c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Run {
            config,
            seed,
            output_dir,
            replications,
        } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return failure(e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.seeds = None;
            }
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Err(e) = cfg.validate() {
                return failure(e);
            }
            let report = match harness::run(&cfg) {
                Ok(r) => r,
                Err(e) => return failure(e),
            };
            for r in &report.replications {
                let violations: u64 = r.rows.iter().map(|m| m.violations).sum();
                let empty: u64 = r.rows.iter().map(|m| m.safe_set_empty_events).sum();
                println!(
                    "seed {:>4}  return {:>12.3} -> {:>12.3}  goal {:.2}  violations {violations}  empty sets {empty}",
                    r.seed, r.initial_eval.mean_return, r.final_eval.mean_return, r.final_eval.goal_fraction
                );
            }
            println!("wrote {}", report.aggregate_path.display());
            ExitCode::SUCCESS
        }
    }
}
