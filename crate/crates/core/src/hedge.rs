//! Multiplicative weights over an expert set with the sigma-power adaptive
//! learning-rate schedule.
//!
//! Each round: fold the round's `sigma^(q/(q+1))` into the running power sum,
//! set `eta_t = min(1/4, sqrt(log K / S_t))`, sample an expert from the
//! exponential-weights distribution over cumulative rewards, then (full
//! information) credit every expert with the reward its own bid would have
//! earned.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::auction::{reward, AuctionRound, QNorm, Stream, Trajectory};
use crate::error::Error;
use crate::experts::Expert;
use crate::Result;

/// Learning-rate cap from the multiplicative-weights analysis.
pub const RATE_CAP: f64 = 0.25;

/// Probabilities below this are flushed to the smallest positive normal so
/// downstream ratios never hit literal zeros; the max-shift keeps the
/// largest exponent at 0, so only dominated experts are affected.
const WEIGHT_FLOOR: f64 = 1e-300;

/// `min(1/4, sqrt(log_size / denom))`, with the cap binding when the
/// denominator is zero (start of a run, or perfectly accurate hints so far).
#[inline]
pub(crate) fn capped_rate(log_size: f64, denom: f64) -> f64 {
    if denom <= 0.0 {
        return RATE_CAP;
    }
    (log_size / denom).sqrt().min(RATE_CAP)
}

/// Adaptive learning rate `min(1/4, sqrt(log K / S))` for `K` experts and
/// sigma-power sum `S`. `K < 2` is rejected (`log K` would not be positive).
pub fn learning_rate(n_experts: usize, sigma_power_sum: f64) -> Result<f64> {
    if n_experts < 2 {
        return Err(Error::invalid(format!(
            "learning_rate needs >= 2 experts, got {n_experts}"
        )));
    }
    if sigma_power_sum < 0.0 {
        return Err(Error::invalid("sigma_power_sum must be >= 0"));
    }
    Ok(capped_rate((n_experts as f64).ln(), sigma_power_sum))
}

/// Exponential weights `exp(eta * score)` normalized to a probability
/// vector, computed with a max shift so that translating all scores by a
/// common constant leaves the output unchanged.
fn softmax(scores: &[f64], eta: f64, out: &mut Vec<f64>) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(scores.iter().map(|&s| {
        let w = (eta * (s - max)).exp();
        if w < WEIGHT_FLOOR {
            f64::MIN_POSITIVE
        } else {
            w
        }
    }));
    let total: f64 = out.iter().sum();
    for w in out.iter_mut() {
        *w /= total;
    }
}

/// Exponential-weights distribution over cumulative rewards.
pub fn sample_distribution(cum_rewards: &[f64], eta: f64) -> Result<Vec<f64>> {
    if cum_rewards.is_empty() {
        return Err(Error::invalid("empty expert set"));
    }
    if !(eta > 0.0) || !cum_rewards.iter().all(|r| r.is_finite()) {
        return Err(Error::invalid("eta must be > 0 and rewards finite"));
    }
    let mut p = Vec::new();
    softmax(cum_rewards, eta, &mut p);
    Ok(p)
}

/// Which denominator drives `eta_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSchedule {
    /// `eta_t = min(1/4, sqrt(log K / sum_{s<=t} sigma_s^(q/(q+1))))`:
    /// the hint-interval schedule.
    SigmaPower,
    /// `eta_t = min(1/4, sqrt(log K / t))`: anytime fallback when hint
    /// accuracy is unobserved.
    RoundCount,
    /// Fixed rate, e.g. `min(1/4, sqrt(log K / sqrt(L T)))` when the total
    /// hint error `L` is known up front (single-hint case).
    Fixed(f64),
}

/// Whether the learner may read `sigma_t` from the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HintMode {
    /// Hint interval `(h_t, sigma_t)` observed.
    Interval,
    /// Single hint: only `h_t` observed; experts see `sigma = 0` and the
    /// schedule must not be `SigmaPower`.
    PointOnly,
}

/// Mutable state of one hedge run.
#[derive(Debug, Clone)]
pub struct HedgeState {
    pub cum_rewards: Vec<f64>,
    pub sigma_power_sum: f64,
    pub rounds_seen: usize,
    q: QNorm,
    schedule: RateSchedule,
    mode: HintMode,
    rng: ChaCha8Rng,
    scratch_bids: Vec<f64>,
    scratch_weights: Vec<f64>,
}

/// Outcome of one hedge round.
#[derive(Debug, Clone, Copy)]
pub struct HedgeDecision {
    pub expert: usize,
    pub bid: f64,
    pub reward: f64,
    pub eta: f64,
}

impl HedgeState {
    pub fn new(
        n_experts: usize,
        q: QNorm,
        schedule: RateSchedule,
        mode: HintMode,
        seed: u64,
    ) -> Result<Self> {
        Self::with_rng(n_experts, q, schedule, mode, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(
        n_experts: usize,
        q: QNorm,
        schedule: RateSchedule,
        mode: HintMode,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if n_experts == 0 {
            return Err(Error::invalid("empty expert set"));
        }
        if mode == HintMode::PointOnly && schedule == RateSchedule::SigmaPower {
            return Err(Error::invalid(
                "sigma-power schedule needs hint intervals; stream provides single hints",
            ));
        }
        if let RateSchedule::Fixed(eta) = schedule {
            if !(eta > 0.0) {
                return Err(Error::invalid("fixed learning rate must be > 0"));
            }
        }
        Ok(HedgeState {
            cum_rewards: vec![0.0; n_experts],
            sigma_power_sum: 0.0,
            rounds_seen: 0,
            q,
            schedule,
            mode,
            rng,
            scratch_bids: Vec::with_capacity(n_experts),
            scratch_weights: Vec::with_capacity(n_experts),
        })
    }

    fn rate(&self) -> f64 {
        let log_k = (self.cum_rewards.len() as f64).ln().max(0.0);
        match self.schedule {
            RateSchedule::SigmaPower => capped_rate(log_k, self.sigma_power_sum),
            RateSchedule::RoundCount => capped_rate(log_k, self.rounds_seen as f64),
            RateSchedule::Fixed(eta) => eta,
        }
    }
}

/// One full-information hedge round. The power sum is updated with the
/// current round's sigma before `eta_t` is computed.
pub fn hedge_step(
    state: &mut HedgeState,
    experts: &[Expert],
    round: &AuctionRound,
) -> Result<HedgeDecision> {
    hedge_step_inner(state, experts, round, None)
}

/// Hedge round with an optimism bonus: sampling scores each expert by
/// `cum_reward + r(bid; assumed_min_bid, v)`, i.e. the reward it would earn
/// if the minimum bid to win were the hint-derived guess. Reward bookkeeping
/// still uses the realized `m_t`.
pub fn hedge_step_optimistic(
    state: &mut HedgeState,
    experts: &[Expert],
    round: &AuctionRound,
    assumed_min_bid: f64,
) -> Result<HedgeDecision> {
    hedge_step_inner(state, experts, round, Some(assumed_min_bid))
}

fn hedge_step_inner(
    state: &mut HedgeState,
    experts: &[Expert],
    round: &AuctionRound,
    assumed_min_bid: Option<f64>,
) -> Result<HedgeDecision> {
    if experts.len() != state.cum_rewards.len() {
        return Err(Error::invalid(format!(
            "state sized for {} experts, got {}",
            state.cum_rewards.len(),
            experts.len()
        )));
    }
    let sigma = match state.mode {
        HintMode::Interval => round.sigma,
        HintMode::PointOnly => 0.0,
    };
    state.rounds_seen += 1;
    state.sigma_power_sum += state.q.sigma_power(sigma);
    let eta = state.rate();

    let bids = &mut state.scratch_bids;
    bids.clear();
    bids.extend(
        experts
            .iter()
            .map(|e| e.bid(round.value, round.hint, sigma)),
    );

    // Sampling scores: cumulative rewards, plus the optimism term when given.
    let weights = &mut state.scratch_weights;
    weights.clear();
    match assumed_min_bid {
        None => weights.extend_from_slice(&state.cum_rewards),
        Some(m_guess) => weights.extend(
            state
                .cum_rewards
                .iter()
                .zip(bids.iter())
                .map(|(&r, &b)| r + reward(b, round.value, m_guess)),
        ),
    }
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (eta * (*w - max)).exp();
        if *w < WEIGHT_FLOOR {
            *w = f64::MIN_POSITIVE;
        }
        total += *w;
    }
    let target = state.rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            chosen = i;
            break;
        }
    }

    let bid = bids[chosen];
    let realized = reward(bid, round.value, round.min_bid_to_win);
    for (r, &b) in state.cum_rewards.iter_mut().zip(bids.iter()) {
        *r += reward(b, round.value, round.min_bid_to_win);
    }
    Ok(HedgeDecision {
        expert: chosen,
        bid,
        reward: realized,
        eta,
    })
}

/// Run hedge over a whole stream. Deterministic given the seed; the hint
/// mode follows the stream's `sigma_visible` flag.
pub fn run_policy(
    experts: &[Expert],
    stream: &Stream,
    schedule: RateSchedule,
    seed: u64,
) -> Result<Trajectory> {
    run_policy_inner(experts, stream, schedule, seed, None)
}

/// [`run_policy`] with the optimism term of the binned replay pipeline:
/// the assumed minimum bid is `h_t + c1 * sigma_t` when the stream exposes
/// sigma, else `h_t`.
pub fn run_policy_optimistic(
    experts: &[Expert],
    stream: &Stream,
    schedule: RateSchedule,
    seed: u64,
    optimism_scale: f64,
) -> Result<Trajectory> {
    run_policy_inner(experts, stream, schedule, seed, Some(optimism_scale))
}

fn run_policy_inner(
    experts: &[Expert],
    stream: &Stream,
    schedule: RateSchedule,
    seed: u64,
    optimism_scale: Option<f64>,
) -> Result<Trajectory> {
    if stream.rounds.is_empty() {
        return Err(Error::invalid("empty stream"));
    }
    let mode = if stream.sigma_visible {
        HintMode::Interval
    } else {
        HintMode::PointOnly
    };
    let mut state = HedgeState::new(experts.len(), stream.q, schedule, mode, seed)?;
    let mut traj = Trajectory::with_capacity(stream.rounds.len());
    for round in &stream.rounds {
        let decision = match optimism_scale {
            None => hedge_step(&mut state, experts, round)?,
            Some(c1) => {
                let m_guess = if stream.sigma_visible {
                    round.hint + c1 * round.sigma
                } else {
                    round.hint
                };
                hedge_step_optimistic(&mut state, experts, round, m_guess)?
            }
        };
        traj.push(round.t, decision.bid, decision.reward);
    }
    Ok(traj)
}
