//! Expert sets for the hedge learners: constant-bid grids, hint experts
//! (sigma-power, fixed-offset and sigma-power-family variants) and the
//! sparse monotone step-function class.

use std::sync::Arc;

use crate::auction::{clamp_bid, QNorm};
use crate::error::Error;
use crate::Result;

/// 0-based value-bin index for `v` under `bins` equal-width bins.
///
/// Bin `i` (1-based) covers `((i-1)/D, i/D]`; the boundary `v = 0` maps to
/// the first bin.
#[inline]
pub fn value_bin_index(v: f64, bins: usize) -> usize {
    debug_assert!(bins >= 1);
    let i = (v * bins as f64).ceil() as isize;
    (i.max(1) as usize).min(bins) - 1
}

/// 0-based bid-grid cell for `x` under `grid` levels at prices `j/grid`,
/// `j = 1..=grid`. Same convention as [`value_bin_index`].
#[inline]
pub fn grid_cell_index(x: f64, grid: usize) -> usize {
    value_bin_index(x, grid)
}

/// Smallest 0-based grid cell whose price `(j+1)/grid` wins against `m`
/// (ties win). Exact against the price comparison even when `m * grid`
/// rounds across an integer, unlike a bare ceil.
#[inline]
pub fn first_winning_cell(m: f64, grid: usize) -> usize {
    debug_assert!(grid >= 1 && m <= 1.0);
    let b = grid as f64;
    let mut j = ((m * b).ceil() as usize).saturating_sub(1).min(grid - 1);
    while j > 0 && (j as f64) / b >= m {
        j -= 1;
    }
    while ((j + 1) as f64) / b < m {
        j += 1;
    }
    j
}

/// A deterministic bid rule: round context in, raw bid out. Raw bids are
/// clamped into `[0, v]` before leaving [`Expert::bid`].
#[derive(Debug, Clone)]
pub enum BidRule {
    /// Always bid the same price.
    Constant(f64),
    /// Bid `h_t + offset`.
    HintPlusOffset(f64),
    /// Bid `h_t + sigma_t^exponent`; covers both the `q/(q+1)` hint-interval
    /// expert and the sigma-power family `h_t + sigma_t^delta`.
    HintPlusSigmaPow { exponent: f64 },
    /// Monotone step function over value bins: bid `supports[levels[bin(v)]]`.
    StepFunction {
        supports: Arc<[f64]>,
        levels: Arc<[u32]>,
    },
}

/// An expert: an identifier plus a deterministic bid rule.
#[derive(Debug, Clone)]
pub struct Expert {
    pub label: String,
    pub rule: BidRule,
}

impl Expert {
    /// Feasible bid for the given round context. `sigma` must be 0 when the
    /// stream hides hint accuracy; hint-independent rules ignore it.
    #[inline]
    pub fn bid(&self, value: f64, hint: f64, sigma: f64) -> f64 {
        let raw = match &self.rule {
            BidRule::Constant(b) => *b,
            BidRule::HintPlusOffset(c) => hint + c,
            BidRule::HintPlusSigmaPow { exponent } => {
                if sigma == 0.0 {
                    hint
                } else {
                    hint + sigma.powf(*exponent)
                }
            }
            BidRule::StepFunction { supports, levels } => {
                let bin = value_bin_index(value, levels.len());
                supports[levels[bin] as usize]
            }
        };
        clamp_bid(raw, value)
    }
}

/// The expert set of the hint-interval hedge policy: `n_grid` base experts
/// bidding `i / n_grid` plus one extra expert bidding
/// `h_t + sigma_t^(q/(q+1))`.
pub fn make_alg1_experts(n_grid: usize, q: QNorm) -> Result<Vec<Expert>> {
    if n_grid == 0 {
        return Err(Error::invalid("n_grid must be >= 1"));
    }
    let mut experts = Vec::with_capacity(n_grid + 1);
    for i in 1..=n_grid {
        let b = i as f64 / n_grid as f64;
        experts.push(Expert {
            label: format!("grid:{b}"),
            rule: BidRule::Constant(b),
        });
    }
    experts.push(Expert {
        label: "hint+sigma_pow".to_owned(),
        rule: BidRule::HintPlusSigmaPow {
            exponent: q.exponent(),
        },
    });
    Ok(experts)
}

/// The single-hint expert family: expert `i` bids `h_t + i/n`, `i = 0..n-1`.
/// Densely covers all constant-gap-above-hint strategies as `n` grows.
pub fn make_single_hint_experts(n: usize) -> Result<Vec<Expert>> {
    if n == 0 {
        return Err(Error::invalid("single-hint expert count must be >= 1"));
    }
    Ok((0..n)
        .map(|i| {
            let c = i as f64 / n as f64;
            Expert {
                label: format!("hint+{c}"),
                rule: BidRule::HintPlusOffset(c),
            }
        })
        .collect())
}

/// The sigma-power hint family: expert `i` bids `h_t + sigma_t^delta_i`.
pub fn make_sigma_power_experts(deltas: &[f64]) -> Result<Vec<Expert>> {
    if deltas.is_empty() {
        return Err(Error::invalid("sigma-power exponent list is empty"));
    }
    deltas
        .iter()
        .map(|&d| {
            if !(d > 0.0) {
                return Err(Error::invalid(format!("sigma-power exponent {d} not > 0")));
            }
            Ok(Expert {
                label: format!("hint+sigma^{d}"),
                rule: BidRule::HintPlusSigmaPow { exponent: d },
            })
        })
        .collect()
}

/// The sparse monotone step-function class: every nondecreasing map from
/// `value_bins` bins to the sorted support levels, one expert per map.
#[derive(Debug, Clone)]
pub struct SparseExpertSet {
    pub supports: Arc<[f64]>,
    pub value_bins: usize,
    /// One level assignment per expert; each is nondecreasing over bins.
    pub assignments: Vec<Arc<[u32]>>,
}

impl SparseExpertSet {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn experts(&self) -> Vec<Expert> {
        self.assignments
            .iter()
            .map(|levels| Expert {
                label: format!(
                    "step:{}",
                    levels
                        .iter()
                        .map(|l| l.to_string())
                        .collect::<Vec<_>>()
                        .join("")
                ),
                rule: BidRule::StepFunction {
                    supports: Arc::clone(&self.supports),
                    levels: Arc::clone(levels),
                },
            })
            .collect()
    }
}

/// Number of nondecreasing maps from `d` bins to `k` levels:
/// `C(d + k - 1, k - 1)`. Errors on overflow past u128.
pub fn sparse_class_count(value_bins: usize, supports: usize) -> Result<u128> {
    binomial(value_bins as u128 + supports as u128 - 1, supports as u128 - 1)
        .ok_or_else(|| Error::invalid("sparse class count overflows u128"))
}

fn binomial(n: u128, mut k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    if k > n - k {
        k = n - k;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

/// Enumerate the sparse step-function class over the given sorted supports.
pub fn enumerate_sparse_experts(supports: &[f64], value_bins: usize) -> Result<SparseExpertSet> {
    if supports.is_empty() {
        return Err(Error::invalid("supports list is empty"));
    }
    if value_bins == 0 {
        return Err(Error::invalid("value_bins must be >= 1"));
    }
    if supports.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("supports must be strictly increasing"));
    }
    let k = supports.len();
    let mut assignments = Vec::new();
    let mut current = vec![0u32; value_bins];
    loop {
        assignments.push(Arc::<[u32]>::from(current.as_slice()));
        // Advance to the next nondecreasing assignment in lexicographic order.
        let mut pos = value_bins;
        loop {
            if pos == 0 {
                return Ok(SparseExpertSet {
                    supports: Arc::from(supports),
                    value_bins,
                    assignments,
                });
            }
            pos -= 1;
            if (current[pos] as usize) < k - 1 {
                let lvl = current[pos] + 1;
                for slot in current.iter_mut().skip(pos) {
                    *slot = lvl;
                }
                break;
            }
        }
    }
}
