//! Online bidding in repeated first-price auctions with hints.
//!
//! A bidder with private value `v_t` bids `b_t` against an unknown highest
//! competing bid `m_t`; winning pays the bid, so the round reward is
//! `(v_t - b_t) * 1{b_t >= m_t}`. Before bidding, the bidder sees a hint
//! `h_t` (a blackbox prediction of `m_t`), optionally with an accuracy
//! figure `sigma_t` bounding the q-th moment of the prediction error.
//!
//! The crate provides:
//!
//! - [`hedge`]: multiplicative weights over an expert set, with the
//!   sigma-power adaptive learning-rate schedule and hint experts;
//! - [`sparse_dp`]: exact exponential-weights sampling over the implicit
//!   class of monotone step functions with at most `K` levels, in
//!   polynomial time per round via forward/backward dynamic programming;
//! - [`meta`]: a two-layer meta-learner (sparse-class node, no-hint node,
//!   pure-hint node) adaptive to unknown hint quality, plus a doubling
//!   wrapper for unknown support count;
//! - [`streams`]: adversarial and stochastic environment generators and
//!   CSV ingestion of `v,m,h,sigma` quadruples;
//! - [`oracles`]: hindsight comparators (best constant bid, best monotone
//!   1-Lipschitz grid function, best sparse step function) and regret
//!   reports;
//! - [`bench`]: a configuration-driven experiment runner backing the
//!   `hintbid` CLI.

pub mod auction;
pub mod bench;
pub mod binned;
pub mod error;
pub mod experts;
pub mod hedge;
pub mod meta;
pub mod oracles;
pub mod sparse_dp;
pub mod streams;

pub use auction::{clamp_bid, reward, AuctionRound, QNorm, Stream, Trajectory, TrajectoryStep};
pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
