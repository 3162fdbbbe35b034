//! Command-line front end: train, evaluate, sweep, oracle, selftest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gini_rl::harness::{self, train::greedy_table_policy, TrainConfig};
use gini_rl::oracle::mvpi_maze_analysis;
use gini_rl::policy::{FeatureMap, PolicyCheckpoint, PolicyParams};
use gini_rl::Error;

#[derive(Parser)]
#[command(name = "gini-rl", version, about = "Risk-averse policy-gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training configuration and write metrics CSV, run manifest,
    /// and the final policy checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
        /// File-name stem; defaults to `<method>_seed<seed>`.
        #[arg(long)]
        stem: Option<String>,
    },
    /// Evaluate a saved policy checkpoint in the config's environment.
    Evaluate {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluate the greedy (argmax) version of the checkpoint.
        #[arg(long)]
        greedy: bool,
    },
    /// Expand a parameter grid into one run per (value, seed).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: lambda, lr_policy, delta, beta, zeta.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. `0.8,1.0,1.2`.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "1,2,3,4,5")]
        seeds: String,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// Print the closed-form MVPI analysis of the maze.
    Oracle {
        #[arg(long, default_value_t = 20.0)]
        goal_reward: f64,
        #[arg(long, default_value_t = 0.2)]
        lambda: f64,
        #[arg(long, default_value_t = 0.999)]
        gamma: f64,
        #[arg(long, default_value_t = 100)]
        max_len: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the frozen invariant suites.
    Selftest,
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { config, seed, out_dir, stem } => {
            let mut cfg = TrainConfig::from_toml_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let artifacts = harness::train::run_and_write(&cfg, &out_dir, stem.as_deref())?;
            println!("wrote {}", artifacts.csv.display());
            println!("wrote {}", artifacts.manifest.display());
            println!("wrote {}", artifacts.policy.display());
            if let Some(last) = artifacts.outcome.metrics.rows.last() {
                println!(
                    "final: episodes={} mean_return={:.4} gd={:.4} optimal_risk_rate={:.3}",
                    last.episode_count, last.mean_return, last.return_gd, last.optimal_risk_rate
                );
            }
            Ok(())
        }
        Command::Evaluate { policy, config, episodes, seed, greedy } => {
            let cfg = TrainConfig::from_toml_file(&config)?;
            let mut env = cfg.env.build()?;
            let text = std::fs::read_to_string(&policy)?;
            let checkpoint: PolicyCheckpoint = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("policy checkpoint: {e}")))?;
            let features = FeatureMap::tabular(env.n_states(), env.n_actions());
            let mut params = PolicyParams::from_checkpoint(checkpoint, features)?;
            if greedy {
                let n_actions = env.n_actions();
                let table: Vec<usize> = (0..env.n_states())
                    .map(|s| {
                        let probs = params.action_probs(s).expect("finite checkpoint");
                        probs
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probs"))
                            .map(|(a, _)| a)
                            .unwrap_or(0)
                    })
                    .collect();
                params = greedy_table_policy(&table, env.n_states(), n_actions)?;
            }
            let summary = harness::evaluate(
                &params,
                env.as_mut(),
                cfg.effective_gamma(),
                episodes,
                seed,
                0,
            )?;
            println!("{}", harness::CSV_HEADER);
            let row = summary.into_row(episodes);
            println!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                row.episode_count,
                row.mean_return,
                row.return_variance,
                row.return_gd,
                row.optimal_risk_rate,
                row.noisy_visit_rate
            );
            Ok(())
        }
        Command::Sweep { config, param, values, seeds, out_dir } => {
            let base = TrainConfig::from_toml_file(&config)?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad --values: {e}")))?;
            let seeds: Vec<u64> = seeds
                .split(',')
                .map(|v| v.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad --seeds: {e}")))?;
            for &value in &values {
                for &seed in &seeds {
                    let mut cfg = base.clone();
                    cfg.seed = seed;
                    match param.as_str() {
                        "lambda" => cfg.lambda = value,
                        "lr_policy" => cfg.lr_policy = value,
                        "delta" => cfg.delta = Some(value),
                        "beta" => cfg.beta = Some(value),
                        "zeta" => cfg.zeta = Some(value),
                        other => {
                            return Err(Error::InvalidArgument(format!(
                                "unknown sweep parameter `{other}`"
                            )))
                        }
                    }
                    cfg.validate()?;
                    let stem =
                        format!("{}_{}{}_seed{}", cfg.method.name(), param, value, seed);
                    let artifacts =
                        harness::train::run_and_write(&cfg, &out_dir, Some(&stem))?;
                    println!("wrote {}", artifacts.csv.display());
                }
            }
            Ok(())
        }
        Command::Oracle { goal_reward, lambda, gamma, max_len, json } => {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::InvalidArgument("oracle needs gamma in (0,1)".into()));
            }
            let analysis = mvpi_maze_analysis(goal_reward, lambda, gamma, max_len);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&analysis)
                        .map_err(|e| Error::InvalidArgument(e.to_string()))?
                );
            } else {
                println!("y                  = {:.6}", analysis.y);
                println!("modified_goal      = {:.4}", analysis.modified_goal);
                println!("modified_red_mean  = {:.4}", analysis.modified_red_mean);
                println!("random_walk_return = {:.4}", analysis.random_walk_return);
                println!("safe_path_return   = {:.4}", analysis.safe_path_return);
            }
            Ok(())
        }
        Command::Selftest => {
            let mut failed = 0;
            for (name, outcome) in harness::selftest::run_all() {
                match outcome {
                    Ok(detail) => println!("PASS {name}: {detail}"),
                    Err(why) => {
                        failed += 1;
                        println!("FAIL {name}: {why}");
                    }
                }
            }
            if failed > 0 {
                return Err(Error::InvalidArgument(format!("{failed} selftest(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
