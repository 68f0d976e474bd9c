//! Experiment configuration: a TOML file with `[experiment]`, `[oracle]`,
//! `[[streams]]`, `[[algorithms]]` and optional `[sweep]` sections. Every
//! default is documented in the README schema table.

use serde::{Deserialize, Serialize};

use crate::auction::{QNorm, Stream, Trajectory};
use crate::binned::{binned_replay, BinnedConfig};
use crate::error::Error;
use crate::experts::{make_alg1_experts, make_single_hint_experts};
use crate::hedge::{run_policy, RateSchedule};
use crate::meta::{run_doubling_meta, run_hint_policy, run_meta, FNodeKind, MetaConfig, MetaHintMode};
use crate::sparse_dp::{run_dp_policy, DpDims};
use crate::streams::StreamSpec;
use crate::Result;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub oracle: OracleSpec,
    pub streams: Vec<StreamSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_name")]
    pub name: String,
    pub seeds: Vec<u64>,
    /// Also write per-round curve files under `curves/`.
    #[serde(default)]
    pub curves: bool,
}

fn default_name() -> String {
    "experiment".to_owned()
}

/// Hindsight comparator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Constant when the stream has a fixed value, else sparse over the
    /// observed `m` values when few, else Lipschitz.
    #[default]
    Auto,
    Constant,
    Lipschitz,
    Sparse,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default)]
    pub kind: OracleKind,
    /// Value bins for the Lipschitz / sparse comparators.
    #[serde(default = "default_oracle_bins")]
    pub value_bins: usize,
    /// Bid grid for the Lipschitz comparator; defaults to
    /// `max(1000, T)` capped at 20000.
    #[serde(default)]
    pub bid_grid: Option<usize>,
    /// Sparse-comparator supports; defaults to the distinct observed `m`.
    #[serde(default)]
    pub supports: Option<Vec<f64>>,
}

fn default_oracle_bins() -> usize {
    200
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            kind: OracleKind::Auto,
            value_bins: default_oracle_bins(),
            bid_grid: None,
            supports: None,
        }
    }
}

/// One algorithm under test. `kind` selects the learner; omitted fields take
/// the documented defaults.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    /// Hedge over a constant-bid grid plus the sigma-power hint expert,
    /// sigma-power schedule. Needs hint intervals.
    Alg1 {
        /// Defaults to the stream horizon.
        #[serde(default)]
        n_grid: Option<usize>,
    },
    /// Hedge over a constant-bid grid plus fixed-offset hint experts.
    /// With `total_error` the fixed rate `min(1/4, sqrt(log K / sqrt(L T)))`
    /// is used; otherwise the anytime `sqrt(log K / t)` fallback.
    SingleHint {
        #[serde(default)]
        n_grid: Option<usize>,
        #[serde(default)]
        n_hint: Option<usize>,
        #[serde(default)]
        total_error: Option<f64>,
    },
    /// Exponential weights over the implicit sparse class with the hint
    /// expert folded in (Algorithm DP).
    SparseDp {
        #[serde(default = "default_dp_bins")]
        value_bins: usize,
        #[serde(default = "default_support_cap")]
        support_cap: usize,
        #[serde(default = "default_dp_bins")]
        bid_grid: usize,
    },
    /// Two-layer meta-learner (sparse node, no-hint node, hint node).
    Meta {
        #[serde(default = "default_dp_bins")]
        value_bins: usize,
        #[serde(default = "default_support_cap")]
        support_cap: usize,
        #[serde(default = "default_dp_bins")]
        bid_grid: usize,
    },
    /// Meta-learner wrapped in the support-cap doubling trick (cap starts
    /// at 8).
    DoublingMeta {
        #[serde(default = "default_dp_bins")]
        value_bins: usize,
        #[serde(default = "default_dp_bins")]
        bid_grid: usize,
    },
    /// The no-hint surrogate node on its own.
    NoHint {
        #[serde(default = "default_dp_bins")]
        value_bins: usize,
        #[serde(default = "default_support_cap")]
        support_cap: usize,
        #[serde(default = "default_dp_bins")]
        bid_grid: usize,
    },
    /// Bid the hint, nothing else.
    BidHintOnly,
    /// Binned replay with the optimistic sampling term.
    Binned {
        #[serde(default = "default_m1")]
        value_bins: usize,
        #[serde(default = "default_m2")]
        hint_bins: usize,
        #[serde(default = "default_c1")]
        optimism_scale: f64,
        #[serde(default = "default_deltas")]
        deltas: Vec<f64>,
        #[serde(default = "default_binned_grid")]
        n_grid: usize,
    },
}

fn default_dp_bins() -> usize {
    100
}
fn default_support_cap() -> usize {
    8
}
fn default_m1() -> usize {
    10
}
fn default_m2() -> usize {
    4
}
fn default_c1() -> f64 {
    1.0
}
fn default_deltas() -> Vec<f64> {
    vec![1.0, 0.5]
}
fn default_binned_grid() -> usize {
    100
}

impl AlgorithmSpec {
    /// Name used in result files.
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Alg1 { .. } => "alg1",
            AlgorithmSpec::SingleHint { .. } => "single_hint",
            AlgorithmSpec::SparseDp { .. } => "sparse_dp",
            AlgorithmSpec::Meta { .. } => "meta",
            AlgorithmSpec::DoublingMeta { .. } => "doubling_meta",
            AlgorithmSpec::NoHint { .. } => "no_hint",
            AlgorithmSpec::BidHintOnly => "bid_hint_only",
            AlgorithmSpec::Binned { .. } => "binned",
        }
    }

    /// True when the algorithm reads `sigma_t` and therefore needs a
    /// hint-interval stream.
    pub fn needs_sigma(&self) -> bool {
        matches!(self, AlgorithmSpec::Alg1 { .. })
    }

    pub fn run(&self, stream: &Stream, seed: u64) -> Result<Trajectory> {
        let horizon = stream.horizon();
        match self {
            AlgorithmSpec::Alg1 { n_grid } => {
                let experts = make_alg1_experts(n_grid.unwrap_or(horizon), stream.q)?;
                run_policy(&experts, stream, RateSchedule::SigmaPower, seed)
            }
            AlgorithmSpec::SingleHint {
                n_grid,
                n_hint,
                total_error,
            } => {
                let n_grid = n_grid.unwrap_or(horizon);
                let n_hint = n_hint.unwrap_or(horizon);
                let mut experts: Vec<_> = make_alg1_experts(n_grid, stream.q)?;
                experts.pop(); // drop the sigma-power expert; keep the grid
                experts.extend(make_single_hint_experts(n_hint)?);
                let schedule = match total_error {
                    Some(l) => {
                        let k = experts.len() as f64;
                        let eta = (k.ln() / (l * horizon as f64).sqrt())
                            .sqrt()
                            .min(crate::hedge::RATE_CAP);
                        RateSchedule::Fixed(eta)
                    }
                    None => RateSchedule::RoundCount,
                };
                // Single hints only: never read sigma even if present.
                let mut view = stream.clone();
                view.sigma_visible = false;
                run_policy(&experts, &view, schedule, seed)
            }
            AlgorithmSpec::SparseDp {
                value_bins,
                support_cap,
                bid_grid,
            } => {
                let dims = DpDims::new(*value_bins, *support_cap, *bid_grid)?;
                run_dp_policy(stream, dims, true, seed)
            }
            AlgorithmSpec::Meta {
                value_bins,
                support_cap,
                bid_grid,
            } => {
                let dims = DpDims::new(*value_bins, *support_cap, *bid_grid)?;
                let cfg = MetaConfig {
                    dims,
                    f_node: FNodeKind::Dp,
                    hint_mode: if stream.sigma_visible {
                        MetaHintMode::Interval
                    } else {
                        MetaHintMode::SinglePoint {
                            hint_experts: 100,
                            total_error: None,
                        }
                    },
                };
                run_meta(stream, &cfg, seed)
            }
            AlgorithmSpec::DoublingMeta {
                value_bins,
                bid_grid,
            } => {
                let dims = DpDims::new(*value_bins, 8, *bid_grid)?;
                let cfg = MetaConfig {
                    dims,
                    f_node: FNodeKind::Dp,
                    hint_mode: if stream.sigma_visible {
                        MetaHintMode::Interval
                    } else {
                        MetaHintMode::SinglePoint {
                            hint_experts: 100,
                            total_error: None,
                        }
                    },
                };
                run_doubling_meta(stream, &cfg, seed).map(|o| o.trajectory)
            }
            AlgorithmSpec::NoHint {
                value_bins,
                support_cap,
                bid_grid,
            } => {
                let dims = DpDims::new(*value_bins, *support_cap, *bid_grid)?;
                run_dp_policy(stream, dims, false, seed)
            }
            AlgorithmSpec::BidHintOnly => run_hint_policy(stream, false),
            AlgorithmSpec::Binned {
                value_bins,
                hint_bins,
                optimism_scale,
                deltas,
                n_grid,
            } => {
                let cfg = BinnedConfig {
                    value_bins: *value_bins,
                    hint_bins: *hint_bins,
                    optimism_scale: *optimism_scale,
                    deltas: deltas.clone(),
                    n_grid: *n_grid,
                };
                binned_replay(stream, &cfg, seed)
            }
        }
    }
}

/// Sweep axis: which parameter the value grid rewrites on the base streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    T,
    L,
    Q,
    K,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::T => "T",
            SweepAxis::L => "L",
            SweepAxis::Q => "q",
            SweepAxis::K => "K",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::config("<config>", e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.seeds.is_empty() {
            return Err(Error::config("experiment.seeds", "at least one seed"));
        }
        if self.streams.is_empty() {
            return Err(Error::config("streams", "at least one stream"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "at least one algorithm"));
        }
        for (i, s) in self.streams.iter().enumerate() {
            let path = format!("streams[{i}]");
            validate_stream(s, &path)?;
            for (j, a) in self.algorithms.iter().enumerate() {
                if a.needs_sigma() && !stream_exposes_sigma(s) {
                    return Err(Error::config(
                        format!("algorithms[{j}]"),
                        format!(
                            "`{}` needs hint intervals but `{path}` is a single-hint stream",
                            a.name()
                        ),
                    ));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::config("sweep.values", "at least one value"));
            }
            if sweep.values.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::config("sweep.values", "values must be positive"));
            }
            if sweep.axis == SweepAxis::K
                && !self
                    .streams
                    .iter()
                    .all(|s| matches!(s, StreamSpec::Sparse { .. }))
            {
                return Err(Error::config(
                    "sweep.axis",
                    "K sweeps apply to sparse streams only",
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn stream_exposes_sigma(spec: &StreamSpec) -> bool {
    match spec {
        StreamSpec::SingleHintLb { .. } => false,
        StreamSpec::Csv { sigma_visible, .. } => *sigma_visible,
        _ => true,
    }
}

fn validate_stream(spec: &StreamSpec, path: &str) -> Result<()> {
    let horizon = match spec {
        StreamSpec::TwoPoint { horizon, .. }
        | StreamSpec::SingleHintLb { horizon, .. }
        | StreamSpec::Blocks { horizon, .. }
        | StreamSpec::Sparse { horizon, .. } => Some(*horizon),
        StreamSpec::Csv { path: p, .. } => {
            if !p.exists() {
                return Err(Error::config(
                    format!("{path}.path"),
                    format!("{} does not exist", p.display()),
                ));
            }
            None
        }
    };
    if horizon == Some(0) {
        return Err(Error::config(format!("{path}.horizon"), "must be >= 1"));
    }
    Ok(())
}

/// Rewrite a base stream spec for one sweep cell.
pub(crate) fn apply_sweep(spec: &StreamSpec, axis: SweepAxis, value: f64) -> Result<StreamSpec> {
    let mut out = spec.clone();
    match (axis, &mut out) {
        (SweepAxis::T, StreamSpec::TwoPoint { horizon, .. })
        | (SweepAxis::T, StreamSpec::SingleHintLb { horizon, .. })
        | (SweepAxis::T, StreamSpec::Blocks { horizon, .. })
        | (SweepAxis::T, StreamSpec::Sparse { horizon, .. }) => {
            *horizon = value.round() as usize;
        }
        (SweepAxis::L, StreamSpec::TwoPoint { horizon, sigma, .. }) => {
            *sigma = value / *horizon as f64;
        }
        (SweepAxis::L, StreamSpec::SingleHintLb { horizon, epsilon, .. }) => {
            // E[sum sigma] = 2 eps^2 T = L.
            *epsilon = (value / (2.0 * *horizon as f64)).sqrt();
        }
        (SweepAxis::L, StreamSpec::Blocks { total_error, .. }) => {
            *total_error = value;
        }
        (SweepAxis::L, StreamSpec::Sparse { horizon, hint_noise, .. }) => {
            *hint_noise = value / *horizon as f64;
        }
        (SweepAxis::Q, StreamSpec::TwoPoint { q, .. })
        | (SweepAxis::Q, StreamSpec::Blocks { q, .. })
        | (SweepAxis::Q, StreamSpec::Sparse { q, .. }) => {
            *q = QNorm::finite(value)?;
        }
        (SweepAxis::K, StreamSpec::Sparse { supports, .. }) => {
            let k = value.round() as usize;
            if k == 0 {
                return Err(Error::config("sweep.values", "K must be >= 1"));
            }
            // K supports evenly spaced across [0.1, 0.7].
            *supports = (0..k)
                .map(|i| 0.1 + 0.6 * i as f64 / k.max(2) as f64)
                .collect();
        }
        (axis, spec) => {
            return Err(Error::config(
                "sweep.axis",
                format!("axis {} does not apply to {}", axis.name(), spec.id()),
            ));
        }
    }
    Ok(out)
}
