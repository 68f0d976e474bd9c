//! `hintbid` — batch experiment runner for first-price auction bidding with
//! hints. Subcommands: `simulate`, `replay`, `oracle`, `sweep`, `validate`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hintbid::auction::QNorm;
use hintbid::bench::{run_experiment, run_sweep, ExperimentConfig};
use hintbid::oracles::{best_constant_bid, best_lipschitz_dp, best_sparse_oracle};
use hintbid::streams::{check_moment_spec, check_moment_stream, load_csv, StreamSpec};

#[derive(Parser)]
#[command(
    name = "hintbid",
    version,
    about = "Online bidding in repeated first-price auctions with hints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured streams and run the configured algorithms.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: results).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the config's seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the configured algorithms on a recorded CSV stream
    /// (`v,m,h,sigma` per line).
    Replay {
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Treat sigma as hidden (single-hint replay).
        #[arg(long)]
        hide_sigma: bool,
    },
    /// Hindsight-oracle evaluation of a recorded CSV stream.
    Oracle {
        #[arg(long)]
        stream: PathBuf,
        /// Value bins for the Lipschitz/sparse comparators.
        #[arg(long, default_value_t = 200)]
        bins: usize,
        /// Bid grid for the Lipschitz comparator (default max(1000, T),
        /// capped at 20000).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Sweep the config's axis grid and fit log-log slopes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the hint-accuracy moment condition of the configured streams
    /// (or of a CSV stream).
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        stream: Option<PathBuf>,
        /// Accuracy order for --stream checks: a number >= 1 or "inf".
        #[arg(long, default_value = "inf")]
        q: String,
        /// Monte-Carlo draws per generative family.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text).map_err(|e| Failure::Config(e.to_string()))
}

fn parse_q(text: &str) -> Result<QNorm, Failure> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "oo" => Ok(QNorm::Infinite),
        other => other
            .parse::<f64>()
            .map_err(|e| Failure::Config(format!("--q: {e}")))
            .and_then(|v| QNorm::finite(v).map_err(|e| Failure::Config(e.to_string()))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = load_config(&config)?;
            cfg.sweep = None;
            if let Some(s) = seed {
                cfg.experiment.seeds = vec![s];
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from("results"));
            let output = run_experiment(&cfg, &out_dir)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            println!(
                "wrote {} result rows to {}",
                output.rows.len(),
                output.results_path.display()
            );
            println!("aggregates: {}", output.aggregate_path.display());
            Ok(())
        }
        Command::Replay {
            stream,
            config,
            out,
            seed,
            hide_sigma,
        } => {
            let mut cfg = load_config(&config)?;
            cfg.sweep = None;
            if let Some(s) = seed {
                cfg.experiment.seeds = vec![s];
            }
            if !stream.exists() {
                return Err(Failure::Config(format!(
                    "--stream {}: no such file",
                    stream.display()
                )));
            }
            let q = cfg
                .streams
                .first()
                .and_then(|s| match s {
                    StreamSpec::Csv { q, .. } => Some(*q),
                    _ => None,
                })
                .unwrap_or(QNorm::Infinite);
            cfg.streams = vec![StreamSpec::Csv {
                path: stream,
                q,
                sigma_visible: !hide_sigma,
            }];
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("results"));
            let output = run_experiment(&cfg, &out_dir)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            println!(
                "wrote {} result rows to {}",
                output.rows.len(),
                output.results_path.display()
            );
            Ok(())
        }
        Command::Oracle { stream, bins, grid } => {
            let load = load_csv(&stream, QNorm::Infinite, true)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let rounds = &load.stream.rounds;
            println!("rounds: {} (dropped {})", rounds.len(), load.dropped);
            let fixed = rounds.iter().all(|r| r.value == rounds[0].value);
            if fixed {
                let o = best_constant_bid(rounds, false)
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                println!("best_constant_bid: bid {} total {}", o.bid, o.total);
            }
            let grid = grid.unwrap_or_else(|| rounds.len().max(1000).min(20_000));
            let lip = best_lipschitz_dp(rounds, bins, grid)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            println!(
                "best_lipschitz_dp[D={bins},B={grid}]: total {} (discretization bound {})",
                lip.total, lip.discretization_bound
            );
            let mut observed: Vec<f64> = rounds.iter().map(|r| r.min_bid_to_win).collect();
            observed.sort_by(f64::total_cmp);
            observed.dedup();
            if observed.len() <= 256 {
                let sp = best_sparse_oracle(rounds, &observed, bins)
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                println!(
                    "best_sparse_oracle[K={},D={bins}]: total {}",
                    observed.len(),
                    sp.total
                );
            } else {
                println!(
                    "best_sparse_oracle: skipped ({} distinct m values)",
                    observed.len()
                );
            }
            Ok(())
        }
        Command::Sweep { config, out, seed } => {
            let mut cfg = load_config(&config)?;
            if cfg.sweep.is_none() {
                return Err(Failure::Config("sweep: section required".to_owned()));
            }
            if let Some(s) = seed {
                cfg.experiment.seeds = vec![s];
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from("results"));
            let output =
                run_sweep(&cfg, &out_dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            for fit in &output.fits {
                println!(
                    "fit {} {} vs {}: slope {:.4} over {} points",
                    fit.algorithm, fit.stream_id, fit.param_axis, fit.slope, fit.n_points
                );
            }
            println!("aggregates: {}", output.aggregate_path.display());
            Ok(())
        }
        Command::Validate {
            config,
            stream,
            q,
            samples,
        } => match (config, stream) {
            (Some(path), None) => {
                let cfg = load_config(&path)?;
                for spec in &cfg.streams {
                    let rep = check_moment_spec(spec, samples)
                        .map_err(|e| Failure::Runtime(e.to_string()))?;
                    println!(
                        "{}: {} (empirical {:.6e}, budget {:.6e}, n={})",
                        spec.id(),
                        if rep.pass { "PASS" } else { "FAIL" },
                        rep.empirical,
                        rep.budget,
                        rep.n_samples
                    );
                }
                Ok(())
            }
            (None, Some(path)) => {
                let qn = parse_q(&q)?;
                let load = load_csv(&path, qn, true)
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                let rep = check_moment_stream(&load.stream);
                println!(
                    "{}: {} (empirical {:.6e}, budget {:.6e}, n={})",
                    load.stream.id,
                    if rep.pass { "PASS" } else { "FAIL" },
                    rep.empirical,
                    rep.budget,
                    rep.n_samples
                );
                Ok(())
            }
            _ => Err(Failure::Config(
                "validate needs exactly one of --config or --stream".to_owned(),
            )),
        },
    }
}
