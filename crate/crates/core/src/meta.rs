//! Two-layer meta-learner adaptive to unknown hint quality, plus the
//! doubling wrapper for unknown support count.
//!
//! Three top-layer nodes, each itself a policy: `f` runs exponential
//! weights over the sparse step-function class with a hint expert folded in
//! (via the DP, or an enumerated hedge when the supports are known); `g` is
//! the no-hint surrogate, the same class without any hint expert on a
//! hint-independent anytime schedule; `h` bids `h_t + sigma_t^(q/(q+1))`
//! outright. The top layer runs multiplicative weights over the three with
//! learning rate `min(1/4, sqrt(log 3 / (floor(L_{t-1}) + 1)))`, which stays
//! well-defined when hints are perfect (`L = 0`).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::auction::{clamp_bid, reward, AuctionRound, QNorm, Stream, Trajectory};
use crate::error::Error;
use crate::experts::{
    enumerate_sparse_experts, grid_cell_index, make_single_hint_experts, BidRule, Expert,
};
use crate::hedge::{capped_rate, hedge_step, HedgeState, HintMode, RateSchedule};
use crate::sparse_dp::{DpDims, DpPolicy, DpSchedule};
use crate::Result;

/// Starting support cap of the doubling wrapper.
pub const DOUBLING_INITIAL_CAP: usize = 8;

/// How the f-node represents the sparse class.
#[derive(Debug, Clone)]
pub enum FNodeKind {
    /// Implicit class over the bid grid via the forward/backward DP
    /// (support locations unknown).
    Dp,
    /// Enumerated hedge over the step functions on the given supports.
    Enumerated { supports: Vec<f64> },
}

/// Hint exposure of the meta-learner.
#[derive(Debug, Clone)]
pub enum MetaHintMode {
    /// Hint intervals observed; sigma-power schedules throughout.
    Interval,
    /// Single hints: the f-node carries the fixed-offset hint family instead
    /// of the sigma-power expert, and the top layer uses the fixed schedule
    /// `min(1/4, sqrt(log(T+2) / sqrt(T L)))` when the total error is known
    /// (anytime `sqrt(log 3 / t)` otherwise).
    SinglePoint {
        hint_experts: usize,
        total_error: Option<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct MetaConfig {
    pub dims: DpDims,
    pub f_node: FNodeKind,
    pub hint_mode: MetaHintMode,
}

impl MetaConfig {
    pub fn dp(dims: DpDims) -> Self {
        MetaConfig {
            dims,
            f_node: FNodeKind::Dp,
            hint_mode: MetaHintMode::Interval,
        }
    }
}

/// Top-layer node identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaNode {
    SparseClass,
    NoHint,
    HintOnly,
}

#[derive(Debug)]
enum FNode {
    Dp(DpPolicy),
    Enumerated {
        experts: Vec<Expert>,
        state: HedgeState,
    },
}

/// One meta round's outcome.
#[derive(Debug, Clone, Copy)]
pub struct MetaDecision {
    pub bid: f64,
    pub reward: f64,
    pub node: MetaNode,
    pub eta_top: f64,
    pub top_distribution: [f64; 3],
}

/// The two-layer learner. One instance per simulation.
#[derive(Debug)]
pub struct MetaLearner {
    q: QNorm,
    horizon: usize,
    hint_mode: MetaHintMode,
    /// Cumulative rewards of (f, g, h).
    pub top_rewards: [f64; 3],
    l_acc: f64,
    rounds_seen: usize,
    f: FNode,
    g: DpPolicy,
    rng: ChaCha8Rng,
}

fn stream_rng(seed: u64, instance: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance * 4 + lane);
    rng
}

impl MetaLearner {
    pub fn new(cfg: &MetaConfig, q: QNorm, horizon: usize, seed: u64) -> Result<Self> {
        Self::instance(cfg, q, horizon, seed, 0)
    }

    /// Build with an instance tag so restarts draw fresh, non-overlapping
    /// randomness from the same seed.
    pub fn instance(
        cfg: &MetaConfig,
        q: QNorm,
        horizon: usize,
        seed: u64,
        instance: u64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        let interval = matches!(cfg.hint_mode, MetaHintMode::Interval);
        let f = match &cfg.f_node {
            FNodeKind::Dp => {
                let schedule = if interval {
                    DpSchedule::HintAdaptive
                } else {
                    DpSchedule::Anytime
                };
                FNode::Dp(DpPolicy::with_rng(
                    cfg.dims,
                    q,
                    schedule,
                    true,
                    stream_rng(seed, instance, 1),
                ))
            }
            FNodeKind::Enumerated { supports } => {
                let mut experts =
                    enumerate_sparse_experts(supports, cfg.dims.value_bins)?.experts();
                match &cfg.hint_mode {
                    MetaHintMode::Interval => experts.push(Expert {
                        label: "hint+sigma_pow".to_owned(),
                        rule: BidRule::HintPlusSigmaPow {
                            exponent: q.exponent(),
                        },
                    }),
                    MetaHintMode::SinglePoint { hint_experts, .. } => {
                        experts.extend(make_single_hint_experts(*hint_experts)?)
                    }
                }
                let (schedule, mode) = if interval {
                    (RateSchedule::SigmaPower, HintMode::Interval)
                } else {
                    (RateSchedule::RoundCount, HintMode::PointOnly)
                };
                let state = HedgeState::with_rng(
                    experts.len(),
                    q,
                    schedule,
                    mode,
                    stream_rng(seed, instance, 1),
                )?;
                FNode::Enumerated { experts, state }
            }
        };
        let g = DpPolicy::with_rng(
            cfg.dims,
            q,
            DpSchedule::Anytime,
            false,
            stream_rng(seed, instance, 2),
        );
        Ok(MetaLearner {
            q,
            horizon,
            hint_mode: cfg.hint_mode.clone(),
            top_rewards: [0.0; 3],
            l_acc: 0.0,
            rounds_seen: 0,
            f,
            g,
            rng: stream_rng(seed, instance, 0),
        })
    }

    /// Top-layer learning rate for the upcoming round (uses the power sum
    /// accumulated through the previous round).
    pub fn eta_top(&self) -> f64 {
        match &self.hint_mode {
            MetaHintMode::Interval => {
                capped_rate(3f64.ln(), self.l_acc.floor() + 1.0)
            }
            MetaHintMode::SinglePoint { total_error, .. } => match total_error {
                Some(l) => {
                    let t = self.horizon as f64;
                    capped_rate(((self.horizon + 2) as f64).ln(), (t * l).sqrt())
                }
                None => capped_rate(3f64.ln(), (self.rounds_seen + 1) as f64),
            },
        }
    }

    /// Run one round: every node bids, one is sampled from the top-layer
    /// exponential weights, and all three reward histories update on the
    /// revealed `m_t` (full information).
    pub fn step(&mut self, round: &AuctionRound) -> Result<MetaDecision> {
        let eta_top = self.eta_top();
        let interval = matches!(self.hint_mode, MetaHintMode::Interval);
        self.rounds_seen += 1;
        if interval {
            self.l_acc += self.q.sigma_power(round.sigma);
        }

        let (f_bid, f_reward) = match &mut self.f {
            FNode::Dp(policy) => {
                let d = policy.step(round)?;
                (d.bid, d.reward)
            }
            FNode::Enumerated { experts, state } => {
                let d = hedge_step(state, experts, round)?;
                (d.bid, d.reward)
            }
        };
        let g_step = self.g.step(round)?;
        let h_bid = if interval {
            clamp_bid(
                round.hint + self.q.sigma_power(round.sigma),
                round.value,
            )
        } else {
            clamp_bid(round.hint, round.value)
        };
        let h_reward = reward(h_bid, round.value, round.min_bid_to_win);

        // Top-layer exponential weights over (f, g, h), max-shifted.
        let max = self
            .top_rewards
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut weights = [0.0; 3];
        let mut total = 0.0;
        for (w, r) in weights.iter_mut().zip(self.top_rewards) {
            *w = (eta_top * (r - max)).exp();
            total += *w;
        }
        let mut dist = [0.0; 3];
        for (d, w) in dist.iter_mut().zip(weights) {
            *d = w / total;
        }
        let target = self.rng.gen::<f64>() * total;
        let node = if target < weights[0] {
            MetaNode::SparseClass
        } else if target < weights[0] + weights[1] {
            MetaNode::NoHint
        } else {
            MetaNode::HintOnly
        };
        let bid = match node {
            MetaNode::SparseClass => f_bid,
            MetaNode::NoHint => g_step.bid,
            MetaNode::HintOnly => h_bid,
        };
        let realized = reward(bid, round.value, round.min_bid_to_win);

        self.top_rewards[0] += f_reward;
        self.top_rewards[1] += g_step.reward;
        self.top_rewards[2] += h_reward;

        Ok(MetaDecision {
            bid,
            reward: realized,
            node,
            eta_top,
            top_distribution: dist,
        })
    }
}

/// Run the meta-learner over a whole stream.
pub fn run_meta(stream: &Stream, cfg: &MetaConfig, seed: u64) -> Result<Trajectory> {
    if stream.rounds.is_empty() {
        return Err(Error::invalid("empty stream"));
    }
    if matches!(cfg.hint_mode, MetaHintMode::Interval) && !stream.sigma_visible {
        return Err(Error::invalid(
            "interval meta-learner needs sigma; stream provides single hints",
        ));
    }
    let mut learner = MetaLearner::new(cfg, stream.q, stream.horizon(), seed)?;
    let mut traj = Trajectory::with_capacity(stream.rounds.len());
    for round in &stream.rounds {
        let d = learner.step(round)?;
        traj.push(round.t, d.bid, d.reward);
    }
    Ok(traj)
}

/// The pure hint policy: bid `clamp(h_t (+ sigma_t^(q/(q+1))), [0, v_t])`
/// every round. With `add_sigma_power = false` this is the bid-the-hint
/// baseline.
pub fn run_hint_policy(stream: &Stream, add_sigma_power: bool) -> Result<Trajectory> {
    if stream.rounds.is_empty() {
        return Err(Error::invalid("empty stream"));
    }
    let mut traj = Trajectory::with_capacity(stream.rounds.len());
    for r in &stream.rounds {
        let raw = if add_sigma_power && stream.sigma_visible {
            r.hint + stream.q.sigma_power(r.sigma)
        } else {
            r.hint
        };
        let bid = clamp_bid(raw, r.value);
        traj.push(r.t, bid, reward(bid, r.value, r.min_bid_to_win));
    }
    Ok(traj)
}

/// Trajectory of a doubling run plus the sequence of support caps used
/// (`8, 16, 32, ...`; one entry per epoch).
#[derive(Debug, Clone)]
pub struct DoublingOutcome {
    pub trajectory: Trajectory,
    pub caps: Vec<usize>,
    /// Round index (1-based) at which each epoch started.
    pub epoch_starts: Vec<usize>,
}

/// Doubling wrapper for unknown support count: run the meta-learner with a
/// cap of 8; once the number of distinct observed `m_t` (snapped to the bid
/// grid) exceeds the cap, double it and restart the learner from scratch.
/// The observed-support set persists across restarts.
pub fn run_doubling_meta(stream: &Stream, cfg: &MetaConfig, seed: u64) -> Result<DoublingOutcome> {
    if stream.rounds.is_empty() {
        return Err(Error::invalid("empty stream"));
    }
    if !matches!(cfg.f_node, FNodeKind::Dp) {
        return Err(Error::invalid(
            "doubling wrapper needs the DP f-node (supports unknown)",
        ));
    }
    let mut cap = DOUBLING_INITIAL_CAP;
    let mut caps = vec![cap];
    let mut epoch_starts = vec![1];
    let mut observed = std::collections::BTreeSet::new();
    let mut epoch = 0u64;
    let mut cfg_now = cfg.clone();
    cfg_now.dims = DpDims::new(cfg.dims.value_bins, cap, cfg.dims.bid_grid)?;
    let mut learner = MetaLearner::instance(&cfg_now, stream.q, stream.horizon(), seed, epoch)?;
    let mut traj = Trajectory::with_capacity(stream.rounds.len());
    for (i, round) in stream.rounds.iter().enumerate() {
        let d = learner.step(round)?;
        traj.push(round.t, d.bid, d.reward);
        observed.insert(grid_cell_index(
            round.min_bid_to_win,
            cfg.dims.bid_grid,
        ));
        if observed.len() > cap && i + 1 < stream.rounds.len() {
            cap *= 2;
            caps.push(cap);
            epoch += 1;
            epoch_starts.push(round.t + 1);
            cfg_now.dims = DpDims::new(cfg.dims.value_bins, cap, cfg.dims.bid_grid)?;
            learner = MetaLearner::instance(&cfg_now, stream.q, stream.horizon(), seed, epoch)?;
        }
    }
    Ok(DoublingOutcome {
        trajectory: traj,
        caps,
        epoch_starts,
    })
}
