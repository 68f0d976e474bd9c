//! Experiment execution: (stream x algorithm x seed) cells, hindsight
//! evaluation, aggregation and slope fits, all deterministic given the
//! config.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::auction::Stream;
use crate::error::Error;
use crate::oracles::{best_constant_bid, best_lipschitz_dp, best_sparse_oracle};
use crate::streams::StreamSpec;
use crate::Result;

use super::config::{
    apply_sweep, ExperimentConfig, OracleKind, OracleSpec,
};

/// One `(stream, algorithm, seed)` summary row of `results.csv`: the final
/// round's index, bid and reward plus the run's cumulative figures.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub stream_id: String,
    pub algorithm: String,
    pub seed: u64,
    pub t: usize,
    pub bid: f64,
    pub reward: f64,
    pub cum_reward: f64,
    pub oracle_cum_reward: f64,
    pub cum_regret: f64,
}

/// One `(stream, algorithm)` row of `aggregates.csv`.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub stream_id: String,
    pub algorithm: String,
    pub param_axis: String,
    pub param_value: f64,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub n_seeds: usize,
}

/// Fitted log-log slope of mean final regret against a sweep axis.
#[derive(Debug, Clone)]
pub struct FitRow {
    pub stream_id: String,
    pub algorithm: String,
    pub param_axis: String,
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
}

#[derive(Debug)]
pub struct RunOutput {
    pub results_path: PathBuf,
    pub aggregate_path: PathBuf,
    pub fits_path: Option<PathBuf>,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    pub fits: Vec<FitRow>,
}

/// Least-squares fit of `ln y` on `ln x`; `None` when fewer than two points
/// or any value is not positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

struct OracleEval {
    total: f64,
    per_round: Vec<f64>,
}

fn evaluate_oracle(spec: &OracleSpec, stream: &Stream) -> Result<OracleEval> {
    let rounds = &stream.rounds;
    let fixed_value = rounds.iter().all(|r| r.value == rounds[0].value);
    let mut observed: Vec<f64> = rounds.iter().map(|r| r.min_bid_to_win).collect();
    observed.sort_by(f64::total_cmp);
    observed.dedup();
    let kind = match spec.kind {
        OracleKind::Auto => {
            if fixed_value {
                OracleKind::Constant
            } else if observed.len() <= 64 {
                OracleKind::Sparse
            } else {
                OracleKind::Lipschitz
            }
        }
        k => k,
    };
    match kind {
        OracleKind::Constant => {
            let o = best_constant_bid(rounds, true)?;
            Ok(OracleEval {
                total: o.per_round.iter().sum(),
                per_round: o.per_round,
            })
        }
        OracleKind::Sparse => {
            let supports = match &spec.supports {
                Some(s) => s.clone(),
                None => observed,
            };
            let o = best_sparse_oracle(rounds, &supports, spec.value_bins)?;
            Ok(OracleEval {
                total: o.per_round.iter().sum(),
                per_round: o.per_round,
            })
        }
        OracleKind::Lipschitz => {
            let grid = spec
                .bid_grid
                .unwrap_or_else(|| rounds.len().max(1000).min(20_000));
            let o = best_lipschitz_dp(rounds, spec.value_bins, grid)?;
            Ok(OracleEval {
                total: o.per_round.iter().sum(),
                per_round: o.per_round,
            })
        }
        OracleKind::Auto => unreachable!(),
    }
}

fn write_csv(path: &Path, header: &str, lines: &[String]) -> Result<()> {
    let mut out = String::with_capacity(lines.len() * 64 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    file.write_all(out.as_bytes()).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Run the config's full `(stream, algorithm, seed)` grid, honoring the
/// sweep section when present. Emits `results.csv` (one row per cell),
/// `aggregates.csv` (mean/std of final regret across seeds) and, for
/// sweeps, `fits.csv` with the log-log slope per (base stream, algorithm).
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_owned(),
        source,
    })?;

    // Expand the sweep: (base index, axis value, rewritten spec).
    let mut cells: Vec<(usize, Option<f64>, StreamSpec)> = Vec::new();
    match &cfg.sweep {
        None => {
            for (i, s) in cfg.streams.iter().enumerate() {
                cells.push((i, None, s.clone()));
            }
        }
        Some(sweep) => {
            for (i, s) in cfg.streams.iter().enumerate() {
                for &v in &sweep.values {
                    cells.push((i, Some(v), apply_sweep(s, sweep.axis, v)?));
                }
            }
        }
    }

    // Build one stream (and its oracle) per (cell, seed); the cell seed
    // shifts the generator seed so seeds vary both the stream draw and the
    // policy randomness.
    let seeds = &cfg.experiment.seeds;
    let prep_jobs: Vec<(StreamSpec, u64)> = cells
        .iter()
        .flat_map(|(_, _, spec)| seeds.iter().map(move |&seed| (spec.clone(), seed)))
        .collect();
    let prepared: Vec<Arc<(Stream, OracleEval)>> = prep_jobs
        .par_iter()
        .map(|(spec, seed)| {
            let stream = crate::streams::with_seed_offset(spec, *seed).build()?;
            let oracle = evaluate_oracle(&cfg.oracle, &stream)?;
            Ok(Arc::new((stream, oracle)))
        })
        .collect::<Result<Vec<_>>>()?;

    // Run every algorithm on every prepared stream.
    let n_seeds = seeds.len();
    let jobs: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|c| {
            (0..cfg.algorithms.len()).flat_map(move |a| (0..n_seeds).map(move |s| (c, a, s)))
        })
        .collect();
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|&(c, a, s)| {
            let prep = &prepared[c * n_seeds + s];
            let (stream, oracle) = (&prep.0, &prep.1);
            let algo = &cfg.algorithms[a];
            let seed = seeds[s];
            let traj = algo.run(stream, seed)?;
            let last = traj.steps.last().expect("nonempty trajectory");
            Ok(ResultRow {
                stream_id: cells[c].2.id(),
                algorithm: algo.name().to_owned(),
                seed,
                t: last.t,
                bid: last.bid,
                reward: last.reward,
                cum_reward: traj.cumulative_reward,
                oracle_cum_reward: oracle.total,
                cum_regret: oracle.total - traj.cumulative_reward,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Per-round curves on demand.
    if cfg.experiment.curves {
        let dir = out_dir.join("curves");
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        for &(c, a, s) in &jobs {
            let prep = &prepared[c * n_seeds + s];
            let algo = &cfg.algorithms[a];
            let seed = seeds[s];
            let traj = algo.run(&prep.0, seed)?;
            let mut lines = Vec::with_capacity(traj.len());
            let mut cum = 0.0;
            let mut oracle_cum = 0.0;
            for (step, o) in traj.steps.iter().zip(&prep.1.per_round) {
                cum += step.reward;
                oracle_cum += o;
                lines.push(format!(
                    "{},{},{},{},{},{},{},{},{}",
                    cells[c].2.id(),
                    algo.name(),
                    seed,
                    step.t,
                    step.bid,
                    step.reward,
                    cum,
                    oracle_cum,
                    oracle_cum - cum
                ));
            }
            let name = format!("{}_{}_{}.csv", cells[c].2.id(), algo.name(), seed);
            write_csv(&dir.join(name), RESULT_HEADER, &lines)?;
        }
    }

    // Aggregate across seeds per (cell, algorithm).
    let axis_name = cfg
        .sweep
        .as_ref()
        .map(|s| s.axis.name().to_owned())
        .unwrap_or_else(|| "none".to_owned());
    let mut aggregates = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        for (a, algo) in cfg.algorithms.iter().enumerate() {
            let regrets: Vec<f64> = (0..n_seeds)
                .map(|s| {
                    let idx = (c * cfg.algorithms.len() + a) * n_seeds + s;
                    rows[idx].cum_regret
                })
                .collect();
            let mean = regrets.iter().sum::<f64>() / regrets.len() as f64;
            let std = if regrets.len() > 1 {
                (regrets.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                    / (regrets.len() - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            aggregates.push(AggregateRow {
                stream_id: cell.2.id(),
                algorithm: algo.name().to_owned(),
                param_axis: axis_name.clone(),
                param_value: cell.1.unwrap_or(0.0),
                mean_final_regret: mean,
                std_final_regret: std,
                n_seeds,
            });
        }
    }

    // Slope fits across the sweep values. Aggregates sit in
    // (cell, algorithm) order, so cell c's rows start at c * #algorithms.
    let mut fits = Vec::new();
    if let Some(sweep) = &cfg.sweep {
        let n_algos = cfg.algorithms.len();
        for (base, base_spec) in cfg.streams.iter().enumerate() {
            for (a, algo) in cfg.algorithms.iter().enumerate() {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for (c, (b, v, _)) in cells.iter().enumerate() {
                    if *b == base {
                        xs.push(v.expect("sweep cell has a value"));
                        ys.push(aggregates[c * n_algos + a].mean_final_regret);
                    }
                }
                if let Some((slope, intercept)) = log_log_slope(&xs, &ys) {
                    fits.push(FitRow {
                        stream_id: base_spec.id(),
                        algorithm: algo.name().to_owned(),
                        param_axis: sweep.axis.name().to_owned(),
                        slope,
                        intercept,
                        n_points: xs.len(),
                    });
                }
            }
        }
    }

    // Serialize.
    let results_path = out_dir.join("results.csv");
    let result_lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.stream_id,
                r.algorithm,
                r.seed,
                r.t,
                r.bid,
                r.reward,
                r.cum_reward,
                r.oracle_cum_reward,
                r.cum_regret
            )
        })
        .collect();
    write_csv(&results_path, RESULT_HEADER, &result_lines)?;

    let aggregate_path = out_dir.join("aggregates.csv");
    let agg_lines: Vec<String> = aggregates
        .iter()
        .map(|a| {
            format!(
                "{},{},{},{},{},{},{}",
                a.stream_id,
                a.algorithm,
                a.param_axis,
                a.param_value,
                a.mean_final_regret,
                a.std_final_regret,
                a.n_seeds
            )
        })
        .collect();
    write_csv(
        &aggregate_path,
        "stream_id,algorithm,param_axis,param_value,mean_final_regret,std_final_regret,n_seeds",
        &agg_lines,
    )?;

    let fits_path = if cfg.sweep.is_some() {
        let path = out_dir.join("fits.csv");
        let fit_lines: Vec<String> = fits
            .iter()
            .map(|f| {
                format!(
                    "{},{},{},{},{},{}",
                    f.stream_id, f.algorithm, f.param_axis, f.slope, f.intercept, f.n_points
                )
            })
            .collect();
        write_csv(
            &path,
            "stream_id,algorithm,param_axis,slope,intercept,n_points",
            &fit_lines,
        )?;
        Some(path)
    } else {
        None
    };

    Ok(RunOutput {
        results_path,
        aggregate_path,
        fits_path,
        rows,
        aggregates,
        fits,
    })
}

const RESULT_HEADER: &str =
    "stream_id,algorithm,seed,t,bid,reward,cum_reward,oracle_cum_reward,cum_regret";

/// [`run_experiment`], requiring a sweep section.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    if cfg.sweep.is_none() {
        return Err(Error::config("sweep", "sweep section required"));
    }
    run_experiment(cfg, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        [experiment]
        seeds = [1, 2, 3]

        [[streams]]
        family = "sparse"
        horizon = 80
        supports = [0.3, 0.6]
        hint_noise = 0.02
        q = "inf"
        seed = 4

        [[algorithms]]
        kind = "sparse_dp"
        value_bins = 4
        support_cap = 2
        bid_grid = 10

        [[algorithms]]
        kind = "bid_hint_only"
    "#;

    #[test]
    fn counting_contract_and_aggregate_consistency() {
        let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg, dir.path()).unwrap();
        // 1 stream x 2 algorithms x 3 seeds = 6 rows.
        assert_eq!(out.rows.len(), 6);
        assert_eq!(out.aggregates.len(), 2);
        for agg in &out.aggregates {
            let regrets: Vec<f64> = out
                .rows
                .iter()
                .filter(|r| r.algorithm == agg.algorithm)
                .map(|r| r.cum_regret)
                .collect();
            let mean = regrets.iter().sum::<f64>() / regrets.len() as f64;
            assert_eq!(agg.mean_final_regret, mean);
            assert_eq!(agg.n_seeds, 3);
        }
        assert!(out.results_path.exists());
        assert!(out.aggregate_path.exists());
        assert!(out.fits_path.is_none());
    }

    #[test]
    fn byte_identical_reruns() {
        let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_experiment(&cfg, d1.path()).unwrap();
        run_experiment(&cfg, d2.path()).unwrap();
        for name in ["results.csv", "aggregates.csv"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn sweep_emits_rows_per_value_and_slope() {
        let cfg_text = format!(
            "{SMALL}\n[sweep]\naxis = \"l\"\nvalues = [1.0, 4.0, 16.0, 64.0]\n"
        );
        let cfg = ExperimentConfig::from_toml(&cfg_text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_sweep(&cfg, dir.path()).unwrap();
        assert_eq!(out.rows.len(), 4 * 2 * 3);
        assert_eq!(out.aggregates.len(), 4 * 2);
        assert!(out.fits_path.is_some());
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let xs = [1.0, 4.0, 16.0, 64.0, 256.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        let (slope, intercept) = log_log_slope(&xs, &ys).unwrap();
        assert!((slope - 0.5).abs() < 1e-12);
        assert!((intercept - 3.0f64.ln()).abs() < 1e-12);
        // Hand fit on a noisy two-point case: exact line through the points.
        let (s2, _) = log_log_slope(&[2.0, 8.0], &[5.0, 10.0]).unwrap();
        assert!((s2 - (2.0f64.ln() / 4.0f64.ln())).abs() < 1e-12);
        assert!(log_log_slope(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }
}
