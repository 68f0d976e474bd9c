//! Hindsight comparators and regret reporting.
//!
//! Three oracle classes, in increasing strength on fixed-value streams:
//! the best constant bid, the best monotone 1-Lipschitz grid function of the
//! private value, and the best monotone step function over a given support
//! set. Each returns its exact optimum over the class together with the
//! per-round reward replay of the maximizer, so regret curves come out of a
//! plain subtraction.

use crate::auction::{clamp_bid, reward, AuctionRound, Trajectory};
use crate::error::Error;
use crate::experts::value_bin_index;
use crate::Result;

/// Best fixed bid in hindsight.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    pub bid: f64,
    pub total: f64,
    pub per_round: Vec<f64>,
}

/// Exact optimum over constant bids. The hindsight reward is piecewise
/// linear with upward jumps exactly at observed `m` values, so scanning
/// those (plus bid 0) is exhaustive. Ties break toward the smaller bid.
///
/// Meant for fixed-value streams; pass `allow_varying_values` to apply the
/// constant comparator anyway.
pub fn best_constant_bid(
    rounds: &[AuctionRound],
    allow_varying_values: bool,
) -> Result<ConstantOracle> {
    if rounds.is_empty() {
        return Err(Error::invalid("no rounds"));
    }
    if !allow_varying_values {
        let v0 = rounds[0].value;
        if rounds.iter().any(|r| r.value != v0) {
            return Err(Error::invalid(
                "constant-bid oracle expects a fixed private value; \
                 pass allow_varying_values to opt in",
            ));
        }
    }
    let mut candidates: Vec<f64> = rounds.iter().map(|r| r.min_bid_to_win).collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best_bid = 0.0;
    let mut best_total = f64::NEG_INFINITY;
    for &b in &candidates {
        let total: f64 = rounds.iter().map(|r| reward(b, r.value, r.min_bid_to_win)).sum();
        if total > best_total {
            best_total = total;
            best_bid = b;
        }
    }
    let per_round = rounds
        .iter()
        .map(|r| reward(best_bid, r.value, r.min_bid_to_win))
        .collect();
    Ok(ConstantOracle {
        bid: best_bid,
        total: best_total,
        per_round,
    })
}

/// Best monotone 1-Lipschitz function on a grid.
#[derive(Debug, Clone)]
pub struct LipschitzOracle {
    /// Chosen bid per value bin, as grid prices `j / bid_grid`.
    pub bids: Vec<f64>,
    pub total: f64,
    pub per_round: Vec<f64>,
    /// Grid discretization error bound `T / bid_grid` against the continuous
    /// comparator.
    pub discretization_bound: f64,
}

/// Aggregate per-(bin, grid-bid) rewards: prices `j / grid` for
/// `j = 0..=grid` (bid 0 included).
fn lipschitz_cells(rounds: &[AuctionRound], bins: usize, grid: usize) -> Vec<f64> {
    let width = grid + 1;
    let mut cells = vec![0.0; bins * width];
    for r in rounds {
        let d = value_bin_index(r.value, bins);
        let base = d * width;
        // Smallest winning j: j/grid >= m, exact against the price
        // comparison even when m * grid rounds across an integer.
        let b = grid as f64;
        let mut first = ((r.min_bid_to_win * b).ceil() as usize).min(grid);
        while first > 0 && (first - 1) as f64 / b >= r.min_bid_to_win {
            first -= 1;
        }
        while (first as f64) / b < r.min_bid_to_win {
            first += 1;
        }
        for j in first..=grid {
            cells[base + j] += r.value - j as f64 / grid as f64;
        }
    }
    cells
}

/// Exact optimum over grid functions `f: bin -> {0, 1/B, ..., 1}` that are
/// nondecreasing with per-bin rise at most `floor(B/D)` grid steps (the
/// 1-Lipschitz constraint on bins of width `1/D`). Dynamic program over
/// (bin, grid level) with a sliding-window max per transition.
pub fn best_lipschitz_dp(
    rounds: &[AuctionRound],
    value_bins: usize,
    bid_grid: usize,
) -> Result<LipschitzOracle> {
    if rounds.is_empty() {
        return Err(Error::invalid("no rounds"));
    }
    if value_bins == 0 || bid_grid == 0 {
        return Err(Error::invalid("value_bins and bid_grid must be >= 1"));
    }
    if value_bins * (bid_grid + 1) > 50_000_000 {
        return Err(Error::invalid(
            "lipschitz oracle grid too large; reduce value_bins or bid_grid",
        ));
    }
    let width = bid_grid + 1;
    let step = bid_grid / value_bins;
    let cells = lipschitz_cells(rounds, value_bins, bid_grid);

    // value[d][j] = best total over bins 0..=d with f(d) = j; transitions
    // allow f(d) - f(d-1) in [0, step]. choice[d][j] records the argmax
    // predecessor (smallest on ties).
    let mut value = vec![f64::NEG_INFINITY; width];
    value.copy_from_slice(&cells[0..width]);
    let mut choice = vec![0u32; value_bins * width];
    let mut next = vec![0.0; width];
    for d in 1..value_bins {
        // Sliding-window max over [j - step, j], smallest index on ties.
        let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
        for j in 0..width {
            while let Some(&back) = deque.back() {
                // Strict: keep the earlier (smaller) index on equal values.
                if value[back] < value[j] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(j);
            while *deque.front().unwrap() + step < j {
                deque.pop_front();
            }
            let best = *deque.front().unwrap();
            choice[d * width + j] = best as u32;
            next[j] = value[best] + cells[d * width + j];
        }
        std::mem::swap(&mut value, &mut next);
    }

    // Smallest optimal level at the last bin, then walk predecessors.
    let mut best_j = 0;
    let mut best_total = f64::NEG_INFINITY;
    for (j, &x) in value.iter().enumerate() {
        if x > best_total {
            best_total = x;
            best_j = j;
        }
    }
    let mut levels = vec![0usize; value_bins];
    levels[value_bins - 1] = best_j;
    for d in (1..value_bins).rev() {
        levels[d - 1] = choice[d * width + levels[d]] as usize;
    }
    let bids: Vec<f64> = levels.iter().map(|&j| j as f64 / bid_grid as f64).collect();
    let per_round = rounds
        .iter()
        .map(|r| {
            let d = value_bin_index(r.value, value_bins);
            reward(bids[d], r.value, r.min_bid_to_win)
        })
        .collect();
    Ok(LipschitzOracle {
        bids,
        total: best_total,
        per_round,
        discretization_bound: rounds.len() as f64 / bid_grid as f64,
    })
}

/// Best monotone step function over a fixed support set.
#[derive(Debug, Clone)]
pub struct SparseOracle {
    /// Chosen support index per value bin (nondecreasing).
    pub levels: Vec<usize>,
    pub total: f64,
    pub per_round: Vec<f64>,
}

/// Exact optimum over the sparse step-function class: nondecreasing maps
/// from value bins to the sorted supports, bids clamped into `[0, v]` like
/// every expert. DP over (bin, support rank) with prefix max; `O(D * K)`
/// after aggregation.
pub fn best_sparse_oracle(
    rounds: &[AuctionRound],
    supports: &[f64],
    value_bins: usize,
) -> Result<SparseOracle> {
    if rounds.is_empty() {
        return Err(Error::invalid("no rounds"));
    }
    if supports.is_empty() {
        return Err(Error::invalid("supports list is empty"));
    }
    if supports.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("supports must be strictly increasing"));
    }
    let k = supports.len();
    let mut cells = vec![0.0; value_bins * k];
    for r in rounds {
        let d = value_bin_index(r.value, value_bins);
        for (i, &s) in supports.iter().enumerate() {
            cells[d * k + i] += reward(clamp_bid(s, r.value), r.value, r.min_bid_to_win);
        }
    }
    let mut value = vec![0.0; k];
    value.copy_from_slice(&cells[0..k]);
    let mut choice = vec![0u32; value_bins * k];
    let mut next = vec![0.0; k];
    for d in 1..value_bins {
        let mut best = 0usize;
        for i in 0..k {
            if value[i] > value[best] {
                best = i;
            }
            choice[d * k + i] = best as u32;
            next[i] = value[best] + cells[d * k + i];
        }
        std::mem::swap(&mut value, &mut next);
    }
    let mut best_i = 0;
    let mut best_total = f64::NEG_INFINITY;
    for (i, &x) in value.iter().enumerate() {
        if x > best_total {
            best_total = x;
            best_i = i;
        }
    }
    let mut levels = vec![0usize; value_bins];
    levels[value_bins - 1] = best_i;
    for d in (1..value_bins).rev() {
        levels[d - 1] = choice[d * k + levels[d]] as usize;
    }
    let per_round = rounds
        .iter()
        .map(|r| {
            let d = value_bin_index(r.value, value_bins);
            let s = supports[levels[d]];
            reward(clamp_bid(s, r.value), r.value, r.min_bid_to_win)
        })
        .collect();
    Ok(SparseOracle {
        levels,
        total: best_total,
        per_round,
    })
}

/// Regret of a policy run against a fixed hindsight oracle.
#[derive(Debug, Clone)]
pub struct RegretReport {
    pub oracle_total: f64,
    pub policy_total: f64,
    /// `oracle_total - policy_total`.
    pub final_regret: f64,
    /// Per-round `oracle reward - policy reward`; may be negative.
    pub per_round_regret: Vec<f64>,
    /// Running sum of `per_round_regret`.
    pub cumulative_regret: Vec<f64>,
}

/// Subtract a policy trajectory from an oracle's per-round reward stream.
pub fn regret_curve(trajectory: &Trajectory, oracle_rewards: &[f64]) -> Result<RegretReport> {
    if trajectory.len() != oracle_rewards.len() {
        return Err(Error::invalid(format!(
            "trajectory has {} rounds, oracle stream {}",
            trajectory.len(),
            oracle_rewards.len()
        )));
    }
    let mut per_round = Vec::with_capacity(oracle_rewards.len());
    let mut cumulative = Vec::with_capacity(oracle_rewards.len());
    let mut acc = 0.0;
    let mut oracle_total = 0.0;
    for (step, &o) in trajectory.steps.iter().zip(oracle_rewards) {
        let d = o - step.reward;
        acc += d;
        oracle_total += o;
        per_round.push(d);
        cumulative.push(acc);
    }
    Ok(RegretReport {
        oracle_total,
        policy_total: trajectory.cumulative_reward,
        final_regret: oracle_total - trajectory.cumulative_reward,
        per_round_regret: per_round,
        cumulative_regret: cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::enumerate_sparse_experts;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn round(t: usize, v: f64, m: f64) -> AuctionRound {
        AuctionRound::new(t, v, 0.5, 0.1, m).unwrap()
    }

    #[test]
    fn constant_bid_examples() {
        let rounds = [round(1, 1.0, 0.3), round(2, 1.0, 0.5), round(3, 1.0, 0.5)];
        let o = best_constant_bid(&rounds, false).unwrap();
        assert_eq!(o.bid, 0.5);
        assert!((o.total - 1.5).abs() < 1e-12);

        let rounds = [round(1, 1.0, 0.9), round(2, 1.0, 0.1)];
        let o = best_constant_bid(&rounds, false).unwrap();
        assert_eq!(o.bid, 0.1);
        assert!((o.total - 0.9).abs() < 1e-12);

        let rounds = [round(1, 1.0, 0.4)];
        let o = best_constant_bid(&rounds, false).unwrap();
        assert_eq!(o.bid, 0.4);
        assert!((o.total - 0.6).abs() < 1e-12);

        assert!(best_constant_bid(&[], false).is_err());
        let varying = [round(1, 1.0, 0.4), round(2, 0.5, 0.4)];
        assert!(best_constant_bid(&varying, false).is_err());
        assert!(best_constant_bid(&varying, true).is_ok());
    }

    /// Exhaustive search over monotone Lipschitz grid functions, written
    /// independently of the DP (plain recursion over levels).
    fn lipschitz_brute(rounds: &[AuctionRound], bins: usize, grid: usize) -> f64 {
        let width = grid + 1;
        let step = grid / bins;
        let cells = lipschitz_cells(rounds, bins, grid);
        fn go(cells: &[f64], width: usize, step: usize, bins: usize, d: usize, j: usize, acc: f64) -> f64 {
            if d == bins {
                return acc;
            }
            let mut best = f64::NEG_INFINITY;
            let hi = (j + step).min(width - 1);
            let lo = if d == 0 { 0 } else { j };
            let hi = if d == 0 { width - 1 } else { hi };
            for nj in lo..=hi {
                let val = go(cells, width, step, bins, d + 1, nj, acc + cells[d * width + nj]);
                if val > best {
                    best = val;
                }
            }
            best
        }
        go(&cells, width, step, bins, 0, 0, 0.0)
    }

    #[test]
    fn lipschitz_example_two_rounds() {
        let rounds = [round(1, 0.5, 0.2), round(2, 1.0, 0.6)];
        let o = best_lipschitz_dp(&rounds, 10, 10).unwrap();
        assert!((o.total - 0.7).abs() < 1e-12, "total = {}", o.total);
        // The chosen function is feasible: monotone with step <= 1 grid unit.
        for w in o.bids.windows(2) {
            assert!(w[1] >= w[0] && w[1] - w[0] <= 0.1 + 1e-12);
        }
        assert_eq!(o.total, lipschitz_brute(&rounds, 10, 10));
    }

    #[test]
    fn lipschitz_all_m_zero_wins_free() {
        let rounds: Vec<AuctionRound> = (1..=5).map(|t| round(t, 0.2 * t as f64, 0.0)).collect();
        let o = best_lipschitz_dp(&rounds, 5, 5).unwrap();
        let expect: f64 = rounds.iter().map(|r| r.value).sum();
        assert!((o.total - expect).abs() < 1e-12);
        assert!(o.bids.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn lipschitz_single_round_reduces_to_constant() {
        let rounds = [round(1, 1.0, 0.4)];
        let o = best_lipschitz_dp(&rounds, 1, 10).unwrap();
        let c = best_constant_bid(&rounds, false).unwrap();
        assert!((o.total - c.total).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_matches_brute_force_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for case in 0..40 {
            let bins = 1 + (case % 5);
            let grid = 1 + (case % 4) + 1;
            let n = 1 + (case % 7);
            let rounds: Vec<AuctionRound> = (1..=n)
                .map(|t| round(t, rng.gen(), rng.gen()))
                .collect();
            let o = best_lipschitz_dp(&rounds, bins, grid).unwrap();
            let brute = lipschitz_brute(&rounds, bins, grid);
            assert_eq!(o.total, brute, "bins={bins} grid={grid}");
        }
    }

    #[test]
    fn sparse_oracle_k1_and_exhaustive() {
        let rounds = [round(1, 1.0, 0.3), round(2, 0.8, 0.5)];
        let o = best_sparse_oracle(&rounds, &[0.5], 3).unwrap();
        let expect: f64 = rounds
            .iter()
            .map(|r| reward(0.5, r.value, r.min_bid_to_win))
            .sum();
        assert!((o.total - expect).abs() < 1e-12);

        // D=3, K=2: matches evaluating all four enumerated experts.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rounds: Vec<AuctionRound> = (1..=6).map(|t| round(t, rng.gen(), rng.gen())).collect();
        let supports = [0.3, 0.6];
        let o = best_sparse_oracle(&rounds, &supports, 3).unwrap();
        let set = enumerate_sparse_experts(&supports, 3).unwrap();
        let best = set
            .experts()
            .iter()
            .map(|e| {
                rounds
                    .iter()
                    .map(|r| reward(e.bid(r.value, r.hint, r.sigma), r.value, r.min_bid_to_win))
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((o.total - best).abs() < 1e-12);
        assert!(o.levels.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn oracle_class_inclusion_ordering() {
        // With supports covering every observed m and a fine shared grid,
        // the sparse oracle dominates the Lipschitz oracle, which dominates
        // the constant oracle on fixed-value streams.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let m_values = [0.2, 0.45, 0.7];
        let rounds: Vec<AuctionRound> = (1..=30)
            .map(|t| round(t, 1.0, m_values[rng.gen_range(0..3)]))
            .collect();
        let constant = best_constant_bid(&rounds, false).unwrap();
        let lip = best_lipschitz_dp(&rounds, 20, 20).unwrap();
        let sparse = best_sparse_oracle(&rounds, &m_values, 20).unwrap();
        assert!(lip.total >= constant.total - 1e-12);
        assert!(sparse.total >= lip.total - 1e-12);
    }

    #[test]
    fn regret_curve_basics() {
        let mut traj = Trajectory::default();
        for t in 1..=10 {
            traj.push(t, 0.5, 0.4);
        }
        let zero = regret_curve(&traj, &traj.rewards().collect::<Vec<_>>()).unwrap();
        assert_eq!(zero.final_regret, 0.0);
        assert!(zero.per_round_regret.iter().all(|&x| x == 0.0));

        let oracle = vec![0.5; 10];
        let r = regret_curve(&traj, &oracle).unwrap();
        assert!((r.final_regret - 1.0).abs() < 1e-12);

        assert!(regret_curve(&traj, &oracle[..5]).is_err());
    }
}
