//! Domain types and the reward/regret primitives everything else consumes.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// One auction round's observables. `min_bid_to_win` is revealed only after
/// bidding; generators fill it in up front and learners must not peek.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionRound {
    /// Round index, 1-based and strictly increasing within a stream.
    pub t: usize,
    /// Private value `v_t` in [0,1].
    pub value: f64,
    /// Hint `h_t` in [0,1]: a point prediction of `min_bid_to_win`.
    pub hint: f64,
    /// Hint accuracy `sigma_t` in [0,1]; bounds the q-th moment of `|h - m|`.
    pub sigma: f64,
    /// Others' highest bid `m_t` in [0,1]; bidding >= this wins.
    pub min_bid_to_win: f64,
}

impl AuctionRound {
    pub fn new(t: usize, value: f64, hint: f64, sigma: f64, min_bid_to_win: f64) -> Result<Self> {
        for (name, x) in [
            ("value", value),
            ("hint", hint),
            ("sigma", sigma),
            ("min_bid_to_win", min_bid_to_win),
        ] {
            if !(0.0..=1.0).contains(&x) || !x.is_finite() {
                return Err(Error::invalid(format!(
                    "round {t}: {name} = {x} outside [0,1]"
                )));
            }
        }
        Ok(AuctionRound {
            t,
            value,
            hint,
            sigma,
            min_bid_to_win,
        })
    }
}

/// Accuracy order `q` of the hint-error moment bound, in `[1, inf]`.
///
/// Larger `q` means the bidder is more confident the error stays below
/// `sigma`; `q = inf` means `m_t` lies in `[h_t - sigma_t, h_t + sigma_t]`
/// almost surely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QNormRepr", into = "QNormRepr")]
pub enum QNorm {
    Finite(f64),
    Infinite,
}

impl QNorm {
    pub const INFINITY: QNorm = QNorm::Infinite;

    pub fn finite(q: f64) -> Result<Self> {
        if !q.is_finite() || q < 1.0 {
            return Err(Error::invalid(format!("q = {q}, must be >= 1 or infinite")));
        }
        Ok(QNorm::Finite(q))
    }

    /// The exponent `q/(q+1)` driving hint-expert bids and learning rates.
    /// Lies in [1/2, 1]; equals 1 exactly at `q = inf`.
    pub fn exponent(&self) -> f64 {
        match self {
            QNorm::Finite(q) => q / (q + 1.0),
            QNorm::Infinite => 1.0,
        }
    }

    /// `sigma^(q/(q+1))`, the per-round term of the power sum `S_t`.
    pub fn sigma_power(&self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            // 0^x = 0 for every admissible exponent, including q = inf.
            return 0.0;
        }
        sigma.powf(self.exponent())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, QNorm::Infinite)
    }
}

/// Serde representation: a number, or the string "inf".
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QNormRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<QNormRepr> for QNorm {
    type Error = String;

    fn try_from(repr: QNormRepr) -> std::result::Result<Self, String> {
        match repr {
            QNormRepr::Number(q) => QNorm::finite(q).map_err(|e| e.to_string()),
            QNormRepr::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "oo" => Ok(QNorm::Infinite),
                other => other
                    .parse::<f64>()
                    .map_err(|e| e.to_string())
                    .and_then(|q| QNorm::finite(q).map_err(|e| e.to_string())),
            },
        }
    }
}

impl From<QNorm> for QNormRepr {
    fn from(q: QNorm) -> Self {
        match q {
            QNorm::Finite(v) => QNormRepr::Number(v),
            QNorm::Infinite => QNormRepr::Text("inf".to_owned()),
        }
    }
}

/// Instantaneous first-price reward `(v - b) * 1{b >= m}`.
///
/// Ties win: bidding exactly the minimum-bid-to-win pays `v - b`. Feasible
/// bids satisfy `b <= v`, in which case the result lies in `[0, v]`; callers
/// that evaluate infeasible grid bids (the DP reward tables do) get the raw
/// signed value.
#[inline]
pub fn reward(bid: f64, value: f64, min_bid_to_win: f64) -> f64 {
    if bid >= min_bid_to_win {
        value - bid
    } else {
        0.0
    }
}

/// Clamp a raw bid into the feasible range `[0, v]`.
#[inline]
pub fn clamp_bid(raw: f64, value: f64) -> f64 {
    raw.max(0.0).min(value)
}

/// One executed round of a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub t: usize,
    pub bid: f64,
    pub reward: f64,
}

/// Per-round record of a policy run plus its cumulative reward.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub cumulative_reward: f64,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Trajectory {
            steps: Vec::with_capacity(n),
            cumulative_reward: 0.0,
        }
    }

    pub fn push(&mut self, t: usize, bid: f64, reward: f64) {
        self.cumulative_reward += reward;
        self.steps.push(TrajectoryStep { t, bid, reward });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Per-round rewards, in order.
    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }
}

/// A fixed sequence of auction rounds with its declared accuracy order and
/// whether `sigma_t` is revealed to learners ("hint interval" vs "single
/// hint" mode).
#[derive(Debug, Clone)]
pub struct Stream {
    pub id: String,
    pub q: QNorm,
    /// False in single-hint mode: `sigma` stays available to evaluators but
    /// learners must be configured not to read it.
    pub sigma_visible: bool,
    pub rounds: Vec<AuctionRound>,
}

impl Stream {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reward_examples() {
        assert_eq!(reward(0.5, 1.0, 0.4), 0.5);
        assert_eq!(reward(0.3, 1.0, 0.4), 0.0);
        // Ties win.
        assert_eq!(reward(0.4, 1.0, 0.4), 0.6);
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp_bid(1.1, 1.0), 1.0);
        assert_eq!(clamp_bid(-0.2, 0.8), 0.0);
        assert_eq!(clamp_bid(0.5, 0.8), 0.5);
    }

    #[test]
    fn qnorm_exponent_endpoints() {
        assert_eq!(QNorm::INFINITY.exponent(), 1.0);
        assert_eq!(QNorm::finite(1.0).unwrap().exponent(), 0.5);
        assert!(QNorm::finite(0.5).is_err());
        assert!(QNorm::finite(f64::NAN).is_err());
    }

    #[test]
    fn qnorm_sigma_power_zero() {
        assert_eq!(QNorm::INFINITY.sigma_power(0.0), 0.0);
        assert_eq!(QNorm::finite(2.0).unwrap().sigma_power(0.0), 0.0);
        assert!((QNorm::finite(1.0).unwrap().sigma_power(0.04) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn qnorm_serde_round_trip() {
        let q: QNorm = toml::from_str::<toml::Value>("q = \"inf\"")
            .unwrap()
            .get("q")
            .unwrap()
            .clone()
            .try_into()
            .unwrap();
        assert!(q.is_infinite());
        let q: QNorm = toml::from_str::<toml::Value>("q = 3.0")
            .unwrap()
            .get("q")
            .unwrap()
            .clone()
            .try_into()
            .unwrap();
        assert_eq!(q, QNorm::Finite(3.0));
    }

    #[test]
    fn round_validation() {
        assert!(AuctionRound::new(1, 0.5, 0.5, 0.0, 0.5).is_ok());
        assert!(AuctionRound::new(1, 1.5, 0.5, 0.0, 0.5).is_err());
        assert!(AuctionRound::new(1, 0.5, -0.1, 0.0, 0.5).is_err());
    }

    #[test]
    fn trajectory_cumulative_matches_sum() {
        let mut traj = Trajectory::default();
        traj.push(1, 0.3, 0.2);
        traj.push(2, 0.4, 0.5);
        let total: f64 = traj.rewards().sum();
        assert_eq!(traj.cumulative_reward, total);
    }

    proptest! {
        #[test]
        fn reward_bounded_for_feasible_bids(
            v in 0.0f64..=1.0,
            frac in 0.0f64..=1.0,
            m in 0.0f64..=1.0,
        ) {
            let b = v * frac; // feasible: b <= v
            let r = reward(b, v, m);
            prop_assert!(r >= 0.0 && r <= v);
        }

        #[test]
        fn reward_monotone_in_bid_on_winning_range(
            v in 0.1f64..=1.0,
            m in 0.0f64..=1.0,
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let m = m * v;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let b1 = m + lo * (v - m);
            let b2 = m + hi * (v - m);
            // Nonincreasing on [m, v], zero below m.
            prop_assert!(reward(b1, v, m) >= reward(b2, v, m));
            if m > 0.0 {
                prop_assert_eq!(reward(0.5 * m * lo, v, m), 0.0);
            }
        }

        #[test]
        fn qnorm_exponent_nondecreasing(q1 in 1.0f64..100.0, q2 in 1.0f64..100.0) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let e1 = QNorm::finite(lo).unwrap().exponent();
            let e2 = QNorm::finite(hi).unwrap().exponent();
            prop_assert!(e1 <= e2);
            prop_assert!((0.5..=1.0).contains(&e1));
            prop_assert!(e2 <= QNorm::INFINITY.exponent());
        }
    }
}
