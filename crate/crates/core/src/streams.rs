//! Stream generators and ingestion: the two-point and block adversarial
//! constructions, the single-hint lower-bound family, a sparse-support
//! stochastic family, and CSV replay of `v,m,h,sigma` quadruples, plus the
//! hint-accuracy moment check every generated stream must satisfy.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{AuctionRound, QNorm, Stream};
use crate::error::Error;
use crate::Result;

/// Which of the two nearly indistinguishable distributions to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoPointBranch {
    G1,
    G2,
}

/// The separation parameter that optimizes the two-point construction:
/// `min(sigma_pow / 2, sigma^(q/(2(q+1))) / (8 sqrt(T)))`.
pub fn two_point_optimal_delta(sigma: f64, q: QNorm, horizon: usize) -> f64 {
    let pow = q.sigma_power(sigma);
    let half_exponent_term = if sigma == 0.0 {
        0.0
    } else {
        sigma.powf(q.exponent() / 2.0) / (8.0 * (horizon as f64).sqrt())
    };
    (0.5 * pow).min(half_exponent_term)
}

/// The separation parameter that optimizes the single-hint construction:
/// `min(epsilon, sqrt(epsilon / (2 T)) / 4)`.
pub fn single_hint_optimal_delta(epsilon: f64, horizon: usize) -> f64 {
    epsilon.min(0.25 * (epsilon / (2.0 * horizon as f64)).sqrt())
}

/// Declarative stream description; `build` realizes it deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSpec {
    /// Le Cam two-point family: `v = 1`, `h = 1/2`, constant `sigma`; `m`
    /// is iid on `{1/2, 1/2 + sigma_pow/2}` with branch-dependent masses.
    TwoPoint {
        horizon: usize,
        q: QNorm,
        sigma: f64,
        /// Separation; `None` picks [`two_point_optimal_delta`].
        #[serde(default)]
        delta: Option<f64>,
        branch: TwoPointBranch,
        seed: u64,
    },
    /// Single-hint lower-bound family: `v = 1`, `h = 1/2`; `sigma_t` is 0
    /// (and `m = h`) or `epsilon` (and `m = h + epsilon`), with
    /// branch-dependent mixing. Sigma is generated but hidden from learners.
    SingleHintLb {
        horizon: usize,
        epsilon: f64,
        /// Separation; `None` picks [`single_hint_optimal_delta`].
        #[serde(default)]
        delta: Option<f64>,
        /// 1 or 2.
        branch: u8,
        seed: u64,
    },
    /// Block construction: the horizon splits into
    /// `N = floor(T^(1/(q+1)) L^(q/(q+1)))` independent fixed-value
    /// subproblems with two-point `m` inside each block.
    Blocks {
        horizon: usize,
        total_error: f64,
        q: QNorm,
        seed: u64,
    },
    /// Sparse-support family: `m` drawn from `K` fixed locations (iid, or
    /// sticky with the given persistence), `h = m + U(-noise, noise)`
    /// truncated to `[0,1]`, `sigma = noise`, `v` uniform above the top
    /// support so every round is winnable.
    Sparse {
        horizon: usize,
        supports: Vec<f64>,
        hint_noise: f64,
        q: QNorm,
        #[serde(default)]
        persistence: f64,
        seed: u64,
    },
    /// Replay of a CSV file of `v,m,h,sigma` rows.
    Csv {
        path: PathBuf,
        #[serde(default = "default_q")]
        q: QNorm,
        #[serde(default = "default_true")]
        sigma_visible: bool,
    },
}

fn default_q() -> QNorm {
    QNorm::Infinite
}

fn default_true() -> bool {
    true
}

impl StreamSpec {
    /// Stable identifier used in result files.
    pub fn id(&self) -> String {
        match self {
            StreamSpec::TwoPoint {
                horizon,
                sigma,
                branch,
                ..
            } => format!(
                "two_point-T{horizon}-s{sigma}-{}",
                match branch {
                    TwoPointBranch::G1 => "g1",
                    TwoPointBranch::G2 => "g2",
                }
            ),
            StreamSpec::SingleHintLb {
                horizon,
                epsilon,
                branch,
                ..
            } => format!("single_hint_lb-T{horizon}-e{epsilon}-b{branch}"),
            StreamSpec::Blocks {
                horizon,
                total_error,
                ..
            } => format!("blocks-T{horizon}-L{total_error}"),
            StreamSpec::Sparse {
                horizon, supports, ..
            } => format!("sparse-T{horizon}-K{}", supports.len()),
            StreamSpec::Csv { path, .. } => format!(
                "csv-{}",
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "stream".to_owned())
            ),
        }
    }

    pub fn build(&self) -> Result<Stream> {
        match self {
            StreamSpec::TwoPoint {
                horizon,
                q,
                sigma,
                delta,
                branch,
                seed,
            } => gen_two_point(*horizon, *q, *sigma, *delta, *branch, *seed),
            StreamSpec::SingleHintLb {
                horizon,
                epsilon,
                delta,
                branch,
                seed,
            } => gen_single_hint_lb(*horizon, *epsilon, *delta, *branch, *seed),
            StreamSpec::Blocks {
                horizon,
                total_error,
                q,
                seed,
            } => gen_blocks(*horizon, *total_error, *q, *seed),
            StreamSpec::Sparse {
                horizon,
                supports,
                hint_noise,
                q,
                persistence,
                seed,
            } => gen_sparse(*horizon, supports, *hint_noise, *q, *persistence, *seed),
            StreamSpec::Csv {
                path,
                q,
                sigma_visible,
            } => Ok(load_csv(path, *q, *sigma_visible)?.stream),
        }
    }
}

/// Two-point adversarial family. Masses per the construction:
/// `P(m = 1/2) = 2 (1 - xbar +/- delta)` with `xbar = 1/2 + sigma_pow / 2`,
/// plus on `G1`, minus on `G2`.
pub fn gen_two_point(
    horizon: usize,
    q: QNorm,
    sigma: f64,
    delta: Option<f64>,
    branch: TwoPointBranch,
    seed: u64,
) -> Result<Stream> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::invalid("sigma must lie in [0,1]"));
    }
    let pow = q.sigma_power(sigma);
    if pow > 0.25 {
        return Err(Error::RegimeViolation(format!(
            "two-point needs sigma^(q/(q+1)) <= 1/4, got {pow}"
        )));
    }
    let delta = delta.unwrap_or_else(|| two_point_optimal_delta(sigma, q, horizon));
    if !(0.0..=0.5 * pow + f64::EPSILON).contains(&delta) {
        return Err(Error::RegimeViolation(format!(
            "two-point separation delta = {delta} must lie in [0, sigma_pow/2 = {}]",
            0.5 * pow
        )));
    }
    let xbar = 0.5 + 0.5 * pow;
    let p_low = match branch {
        TwoPointBranch::G1 => 2.0 * (1.0 - xbar + delta),
        TwoPointBranch::G2 => 2.0 * (1.0 - xbar - delta),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rounds = (1..=horizon)
        .map(|t| {
            let m = if rng.gen::<f64>() < p_low { 0.5 } else { xbar };
            AuctionRound::new(t, 1.0, 0.5, sigma, m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stream {
        id: format!("two_point-{seed}"),
        q,
        sigma_visible: true,
        rounds,
    })
}

/// Single-hint lower-bound family. Branch 1 draws `sigma = 0` with
/// probability `1 - 2 (epsilon - delta)`, branch 2 with
/// `1 - 2 (epsilon + delta)`; otherwise `sigma = epsilon` and
/// `m = h + epsilon`. The stream is marked single-hint: learners see only
/// `h_t`.
pub fn gen_single_hint_lb(
    horizon: usize,
    epsilon: f64,
    delta: Option<f64>,
    branch: u8,
    seed: u64,
) -> Result<Stream> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    if !(epsilon > 0.0 && epsilon <= 0.125) {
        return Err(Error::RegimeViolation(format!(
            "epsilon = {epsilon} must lie in (0, 1/8]"
        )));
    }
    let delta = delta.unwrap_or_else(|| single_hint_optimal_delta(epsilon, horizon));
    if !(0.0..=epsilon).contains(&delta) {
        return Err(Error::RegimeViolation(format!(
            "delta = {delta} must lie in [0, epsilon]"
        )));
    }
    let p_zero = match branch {
        1 => 1.0 - 2.0 * (epsilon - delta),
        2 => 1.0 - 2.0 * (epsilon + delta),
        other => {
            return Err(Error::invalid(format!(
                "branch must be 1 or 2, got {other}"
            )))
        }
    };
    let h = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rounds = (1..=horizon)
        .map(|t| {
            if rng.gen::<f64>() < p_zero {
                AuctionRound::new(t, 1.0, h, 0.0, h)
            } else {
                AuctionRound::new(t, 1.0, h, epsilon, h + epsilon)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stream {
        id: format!("single_hint_lb-{seed}"),
        q: QNorm::Infinite,
        sigma_visible: false,
        rounds,
    })
}

/// Block adversarial family. Requires the regime
/// `L <= sqrt(T)^((q-1)/q)` so that blocks form independent subproblems;
/// produces `N * block_len <= T` rounds.
pub fn gen_blocks(horizon: usize, total_error: f64, q: QNorm, seed: u64) -> Result<Stream> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    if !(total_error > 0.0) {
        return Err(Error::invalid("total_error must be > 0"));
    }
    let t = horizon as f64;
    let e = q.exponent();
    // (q-1)/q expressed through the exponent e = q/(q+1).
    let regime_exp = (2.0 * e - 1.0) / e;
    let regime_cap = t.sqrt().powf(regime_exp);
    if total_error > regime_cap + 1e-12 {
        return Err(Error::RegimeViolation(format!(
            "blocks family needs L <= sqrt(T)^((q-1)/q) = {regime_cap}, got {total_error}"
        )));
    }
    let sigma = total_error / t;
    let pow = q.sigma_power(sigma);
    let n_blocks = (t.powf(1.0 - e) * total_error.powf(e)).floor() as usize;
    let block_len = ((t / total_error).powf(e)).floor() as usize;
    if n_blocks == 0 || block_len == 0 {
        return Err(Error::RegimeViolation(
            "degenerate block decomposition; raise T or L".to_owned(),
        ));
    }
    let p_up = 0.25 * pow;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(n_blocks * block_len);
    let mut t_idx = 0usize;
    for i in 0..n_blocks {
        let v = 0.5 + i as f64 / (2.0 * n_blocks as f64);
        let h = 0.25 + i as f64 / 4.0 * pow;
        let m_up = 0.25 + (i + 1) as f64 / 4.0 * pow;
        for _ in 0..block_len {
            t_idx += 1;
            let m = if rng.gen::<f64>() < p_up { m_up } else { h };
            rounds.push(AuctionRound::new(t_idx, v, h, sigma, m)?);
        }
    }
    Ok(Stream {
        id: format!("blocks-{seed}"),
        q,
        sigma_visible: true,
        rounds,
    })
}

/// Sparse-support stochastic family.
pub fn gen_sparse(
    horizon: usize,
    supports: &[f64],
    hint_noise: f64,
    q: QNorm,
    persistence: f64,
    seed: u64,
) -> Result<Stream> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    if supports.is_empty() {
        return Err(Error::invalid("supports list is empty"));
    }
    if supports.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid("supports must lie in [0,1]"));
    }
    if supports.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("supports must be strictly increasing"));
    }
    if !(0.0..=1.0).contains(&hint_noise) {
        return Err(Error::invalid("hint_noise must lie in [0,1]"));
    }
    if !(0.0..=1.0).contains(&persistence) {
        return Err(Error::invalid("persistence must lie in [0,1]"));
    }
    let s_max = *supports.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = rng.gen_range(0..supports.len());
    let rounds = (1..=horizon)
        .map(|t| {
            if t > 1 && persistence > 0.0 {
                if rng.gen::<f64>() >= persistence {
                    current = rng.gen_range(0..supports.len());
                }
            } else if t > 1 {
                current = rng.gen_range(0..supports.len());
            }
            let m = supports[current];
            let h = if hint_noise == 0.0 {
                m
            } else {
                (m + rng.gen_range(-hint_noise..hint_noise)).clamp(0.0, 1.0)
            };
            let v = s_max + rng.gen::<f64>() * (1.0 - s_max);
            AuctionRound::new(t, v, h, hint_noise, m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stream {
        id: format!("sparse-{seed}"),
        q,
        sigma_visible: true,
        rounds,
    })
}

/// A CSV stream plus how many rows the loader pruned.
#[derive(Debug)]
pub struct CsvLoad {
    pub stream: Stream,
    /// Rows dropped for fields outside `[0,1]` or `v <= m`.
    pub dropped: usize,
}

/// Load `v,m,h,sigma` quadruples. No header by default; a non-numeric first
/// row is auto-detected and skipped. Rows with any field outside `[0,1]` or
/// with `v <= m` are dropped and counted.
pub fn load_csv(path: &Path, q: QNorm, sigma_visible: bool) -> Result<CsvLoad> {
    let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut rounds = Vec::new();
    let mut dropped = 0usize;
    for (line_no, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Csv(format!(
                "{}:{}: expected 4 comma-separated fields, got {}",
                path.display(),
                line_no + 1,
                fields.len()
            )));
        }
        let parsed: Vec<std::result::Result<f64, _>> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        if parsed.iter().any(|p| p.is_err()) {
            if line_no == 0 {
                // Header row.
                continue;
            }
            return Err(Error::Csv(format!(
                "{}:{}: non-numeric field",
                path.display(),
                line_no + 1
            )));
        }
        let vals: Vec<f64> = parsed.into_iter().map(|p| p.unwrap()).collect();
        let (v, m, h, sigma) = (vals[0], vals[1], vals[2], vals[3]);
        let in_range = vals.iter().all(|x| (0.0..=1.0).contains(x));
        if !in_range || v <= m {
            dropped += 1;
            continue;
        }
        rounds.push(AuctionRound::new(rounds.len() + 1, v, h, sigma, m)?);
    }
    if rounds.is_empty() {
        return Err(Error::Csv(format!(
            "{}: no valid rows ({} dropped)",
            path.display(),
            dropped
        )));
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_owned());
    Ok(CsvLoad {
        stream: Stream {
            id,
            q,
            sigma_visible,
            rounds,
        },
        dropped,
    })
}

/// Result of a hint-accuracy moment check.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub q: QNorm,
    pub n_samples: usize,
    /// Finite q: sample mean of `|h - m|^q`. Infinite q: max of
    /// `|h - m| - sigma` (a nonpositive margin passes).
    pub empirical: f64,
    /// Finite q: `1.05 x` sample mean of `sigma^q`. Infinite q: zero.
    pub budget: f64,
    pub pass: bool,
}

const MOMENT_SLACK: f64 = 1.05;

fn moment_from_rounds(rounds: &[AuctionRound], q: QNorm) -> MomentReport {
    let n = rounds.len();
    match q {
        QNorm::Infinite => {
            let margin = rounds
                .iter()
                .map(|r| (r.hint - r.min_bid_to_win).abs() - r.sigma)
                .fold(f64::NEG_INFINITY, f64::max);
            MomentReport {
                q,
                n_samples: n,
                empirical: margin,
                budget: 0.0,
                pass: margin <= 1e-12,
            }
        }
        QNorm::Finite(qv) => {
            let err: f64 = rounds
                .iter()
                .map(|r| (r.hint - r.min_bid_to_win).abs().powf(qv))
                .sum::<f64>()
                / n as f64;
            let budget = MOMENT_SLACK
                * (rounds.iter().map(|r| r.sigma.powf(qv)).sum::<f64>() / n as f64);
            MomentReport {
                q,
                n_samples: n,
                empirical: err,
                budget,
                pass: err <= budget,
            }
        }
    }
}

/// Sample-mean (finite q) or pointwise (q = inf) check of the hint-accuracy
/// constraint on a fixed stream, against its declared q.
pub fn check_moment_stream(stream: &Stream) -> MomentReport {
    moment_from_rounds(&stream.rounds, stream.q)
}

/// Monte-Carlo moment check of a generative family: rebuilds the spec with
/// fresh seeds until `n_samples` rounds are drawn, then applies the
/// sample-mean (or pointwise) criterion.
pub fn check_moment_spec(spec: &StreamSpec, n_samples: usize) -> Result<MomentReport> {
    if let StreamSpec::Csv { .. } = spec {
        let stream = spec.build()?;
        return Ok(check_moment_stream(&stream));
    }
    let mut rounds = Vec::with_capacity(n_samples);
    let mut salt = 0u64;
    while rounds.len() < n_samples {
        let reseeded = with_seed_offset(spec, salt);
        let stream = reseeded.build()?;
        rounds.extend(stream.rounds);
        salt += 1;
    }
    rounds.truncate(n_samples);
    let q = declared_q(spec);
    Ok(moment_from_rounds(&rounds, q))
}

fn declared_q(spec: &StreamSpec) -> QNorm {
    match spec {
        StreamSpec::TwoPoint { q, .. }
        | StreamSpec::Blocks { q, .. }
        | StreamSpec::Sparse { q, .. }
        | StreamSpec::Csv { q, .. } => *q,
        StreamSpec::SingleHintLb { .. } => QNorm::Infinite,
    }
}

/// Copy of the spec with its generator seed displaced; CSV streams are
/// unaffected. Offsets are spread with a 64-bit mixing constant so nearby
/// offsets give unrelated ChaCha seeds.
pub(crate) fn with_seed_offset(spec: &StreamSpec, offset: u64) -> StreamSpec {
    let mut copy = spec.clone();
    let salt = 0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(offset);
    match &mut copy {
        StreamSpec::TwoPoint { seed, .. }
        | StreamSpec::SingleHintLb { seed, .. }
        | StreamSpec::Blocks { seed, .. }
        | StreamSpec::Sparse { seed, .. } => *seed = seed.wrapping_add(salt),
        StreamSpec::Csv { .. } => {}
    }
    copy
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn two_point_masses_and_moment() {
        // q=1, sigma=0.04: pow=0.2, xbar=0.6; G1 puts 0.9 on 1/2, 0.1 on 0.6.
        let q = QNorm::finite(1.0).unwrap();
        let s = gen_two_point(200_000, q, 0.04, Some(0.05), TwoPointBranch::G1, 7).unwrap();
        assert!(s.sigma_visible);
        let low = s.rounds.iter().filter(|r| r.min_bid_to_win == 0.5).count();
        let frac = low as f64 / s.rounds.len() as f64;
        assert!((frac - 0.9).abs() < 0.005, "frac = {frac}");
        let up = s
            .rounds
            .iter()
            .filter(|r| r.min_bid_to_win != 0.5)
            .map(|r| r.min_bid_to_win)
            .next()
            .unwrap();
        assert!((up - 0.6).abs() < 1e-12);
        // Analytic moment: E|m-h| = 0.1 * 0.1 = 0.01 <= sigma = 0.04.
        let rep = check_moment_stream(&s);
        assert!(rep.pass);
        assert!((rep.empirical - 0.01).abs() < 0.002);

        let s2 = gen_two_point(200_000, q, 0.04, Some(0.05), TwoPointBranch::G2, 7).unwrap();
        let low2 = s2.rounds.iter().filter(|r| r.min_bid_to_win == 0.5).count();
        assert!((low2 as f64 / 200_000.0 - 0.7).abs() < 0.005);
    }

    #[test]
    fn two_point_zero_delta_branches_match() {
        let q = QNorm::finite(2.0).unwrap();
        let a = gen_two_point(500, q, 0.01, Some(0.0), TwoPointBranch::G1, 3).unwrap();
        let b = gen_two_point(500, q, 0.01, Some(0.0), TwoPointBranch::G2, 3).unwrap();
        assert_eq!(a.rounds, b.rounds);
    }

    #[test]
    fn two_point_guards() {
        let q = QNorm::finite(1.0).unwrap();
        // sigma^(1/2) = 0.5 > 1/4.
        assert!(gen_two_point(100, q, 0.25, None, TwoPointBranch::G1, 0).is_err());
        // delta beyond pow/2.
        assert!(gen_two_point(100, q, 0.04, Some(0.2), TwoPointBranch::G1, 0).is_err());
    }

    #[test]
    fn single_hint_expected_total_error() {
        // Averaged over both branches, E[sum sigma] = 2 eps^2 T = 20.
        let mut total = 0.0;
        let reps = 40;
        for seed in 0..reps {
            for branch in [1, 2] {
                let s = gen_single_hint_lb(1000, 0.1, Some(0.05), branch, seed).unwrap();
                assert!(!s.sigma_visible);
                total += s.rounds.iter().map(|r| r.sigma).sum::<f64>();
            }
        }
        let mean = total / (2.0 * reps as f64);
        assert!((mean - 20.0).abs() < 1.5, "mean = {mean}");
    }

    #[test]
    fn single_hint_branch_probability_and_structure() {
        let s = gen_single_hint_lb(100_000, 0.1, Some(0.05), 1, 11).unwrap();
        let zero = s.rounds.iter().filter(|r| r.sigma == 0.0).count();
        assert!((zero as f64 / 100_000.0 - 0.9).abs() < 0.01);
        for r in &s.rounds {
            if r.sigma == 0.0 {
                assert_eq!(r.min_bid_to_win, r.hint);
            } else {
                assert!((r.min_bid_to_win - (r.hint + 0.1)).abs() < 1e-12);
            }
        }
        assert!(gen_single_hint_lb(100, 0.2, None, 1, 0).is_err());
        // delta = 0 makes branches identical.
        let a = gen_single_hint_lb(500, 0.1, Some(0.0), 1, 5).unwrap();
        let b = gen_single_hint_lb(500, 0.1, Some(0.0), 2, 5).unwrap();
        assert_eq!(a.rounds, b.rounds);
    }

    #[test]
    fn blocks_decomposition_arithmetic() {
        let q = QNorm::finite(3.0).unwrap();
        let s = gen_blocks(10_000, 16.0, q, 2).unwrap();
        // N = 10 * 8 = 80 blocks of length 125.
        assert_eq!(s.rounds.len(), 80 * 125);
        // Block 0: v = 1/2, h = 1/4.
        assert_eq!(s.rounds[0].value, 0.5);
        assert_eq!(s.rounds[0].hint, 0.25);
        // Adjacent blocks' feasible bid ranges stay separated: the bid range
        // of block i tops out at h_i + pow/4 and 1/(2N) >= pow/2.
        let pow = q.sigma_power(16.0 / 10_000.0);
        assert!(1.0 / (2.0 * 80.0) >= 0.5 * pow);
        let rep = check_moment_stream(&s);
        assert!(rep.pass);
        // q=1 regime cap is L <= 1.
        assert!(gen_blocks(10_000, 100.0, QNorm::finite(1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn sparse_family_structure() {
        let q = QNorm::Infinite;
        let s = gen_sparse(2000, &[0.5], 0.0, q, 0.0, 9).unwrap();
        for r in &s.rounds {
            assert_eq!(r.min_bid_to_win, 0.5);
            assert_eq!(r.hint, 0.5);
            assert_eq!(r.sigma, 0.0);
            assert!(r.value >= 0.5);
        }

        let supports = [0.1, 0.2, 0.35, 0.4, 0.62];
        let s = gen_sparse(5000, &supports, 0.0, q, 0.0, 1).unwrap();
        let mut seen: Vec<f64> = s.rounds.iter().map(|r| r.min_bid_to_win).collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 5);

        assert!(gen_sparse(100, &[], 0.0, q, 0.0, 0).is_err());
        assert!(gen_sparse(100, &[0.5, 0.2], 0.0, q, 0.0, 0).is_err());
    }

    #[test]
    fn sparse_moment_monte_carlo() {
        let q = QNorm::finite(2.0).unwrap();
        let spec = StreamSpec::Sparse {
            horizon: 50_000,
            supports: vec![0.2, 0.4, 0.6],
            hint_noise: 0.02,
            q,
            persistence: 0.0,
            seed: 3,
        };
        let rep = check_moment_spec(&spec, 200_000).unwrap();
        assert!(rep.pass, "empirical {} budget {}", rep.empirical, rep.budget);
        // Uniform noise has E|h-m|^2 = noise^2 / 3, comfortably below budget.
        assert!(rep.empirical <= 0.02f64.powi(2) * 1.01);
    }

    #[test]
    fn moment_detects_pointwise_violation() {
        let rounds = vec![AuctionRound::new(1, 1.0, 0.9, 0.1, 0.4).unwrap()];
        let stream = Stream {
            id: "bad".into(),
            q: QNorm::Infinite,
            sigma_visible: true,
            rounds,
        };
        let rep = check_moment_stream(&stream);
        assert!(!rep.pass);

        let rounds = vec![AuctionRound::new(1, 1.0, 0.4, 0.0, 0.4).unwrap()];
        let stream = Stream {
            id: "exact".into(),
            q: QNorm::Infinite,
            sigma_visible: true,
            rounds,
        };
        assert!(check_moment_stream(&stream).pass);
    }

    #[test]
    fn generators_deterministic_given_seed() {
        let q = QNorm::finite(1.0).unwrap();
        let a = gen_two_point(300, q, 0.04, None, TwoPointBranch::G1, 5).unwrap();
        let b = gen_two_point(300, q, 0.04, None, TwoPointBranch::G1, 5).unwrap();
        assert_eq!(a.rounds, b.rounds);
        let c = gen_sparse(300, &[0.3, 0.6], 0.05, q, 0.5, 8).unwrap();
        let d = gen_sparse(300, &[0.3, 0.6], 0.05, q, 0.5, 8).unwrap();
        assert_eq!(c.rounds, d.rounds);
    }

    #[test]
    fn csv_round_trip_prune_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rounds.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "v,m,h,sigma").unwrap();
        writeln!(f, "0.82,0.41,0.44,0.05").unwrap();
        writeln!(f, "0.3,0.5,0.4,0.1").unwrap(); // v <= m: dropped
        writeln!(f, "1.2,0.5,0.4,0.1").unwrap(); // out of range: dropped
        writeln!(f, "0.9,0.2,0.25,0.02").unwrap();
        drop(f);
        let load = load_csv(&path, QNorm::Infinite, true).unwrap();
        assert_eq!(load.dropped, 2);
        assert_eq!(load.stream.rounds.len(), 2);
        let r = load.stream.rounds[0];
        assert_eq!(
            (r.value, r.min_bid_to_win, r.hint, r.sigma),
            (0.82, 0.41, 0.44, 0.05)
        );
        assert_eq!(r.t, 1);

        let empty = dir.path().join("empty.csv");
        std::fs::File::create(&empty).unwrap();
        assert!(load_csv(&empty, QNorm::Infinite, true).is_err());
    }
}
