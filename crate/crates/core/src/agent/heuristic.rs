use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{AgentError, Observation};

/// Parameters of the synthetic expectation rule.
///
/// Without history the rule interpolates between a linear price ramp
/// (`K` at price 0, `0` at `price_ceiling`) and the middle count `K/2`.
/// With `center_pull > 0` it under-predicts at low prices and over-predicts
/// at high prices. History blends in the last realized total and its linear
/// trend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicParams {
    /// Weight on the last realized total.
    pub anchor_weight: f64,
    /// Pull of the no-history guess toward `K/2`.
    pub center_pull: f64,
    /// Weight on the extrapolated trend of the last two realized totals.
    pub trend_weight: f64,
    /// Price at which the ramp reaches zero.
    pub price_ceiling: f64,
    /// Standard deviation of additive Gaussian jitter, in participants.
    #[serde(default)]
    pub noise: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            anchor_weight: 0.3,
            center_pull: 0.4,
            trend_weight: 0.2,
            price_ceiling: 49.99,
            noise: 0.0,
        }
    }
}

impl HeuristicParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(AgentError::HeuristicParams(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("anchor_weight", self.anchor_weight)?;
        unit("center_pull", self.center_pull)?;
        unit("trend_weight", self.trend_weight)?;
        if self.anchor_weight + self.trend_weight > 1.0 {
            return Err(AgentError::HeuristicParams(format!(
                "anchor_weight + trend_weight = {} exceeds 1",
                self.anchor_weight + self.trend_weight
            )));
        }
        if !(self.price_ceiling.is_finite() && self.price_ceiling > 0.0) {
            return Err(AgentError::HeuristicParams(format!(
                "price_ceiling = {} must be positive",
                self.price_ceiling
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(AgentError::HeuristicParams(format!(
                "noise = {} must be non-negative",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Expected total participants under the synthetic rule, rounded and clamped
/// to `[0, K]`.
pub fn heuristic_expectation(params: &HeuristicParams, obs: &Observation) -> Result<usize, AgentError> {
    params.validate()?;
    let k = obs.population as f64;
    let ramp = (1.0 - obs.price.value() / params.price_ceiling).clamp(0.0, 1.0);
    let prior = (1.0 - params.center_pull) * k * ramp + params.center_pull * k / 2.0;

    let mut value = match obs.visible_history.as_slice() {
        [] => prior,
        [.., last] => {
            let last_total = last.realized_total as f64;
            let trend = match obs.visible_history.len() {
                1 => last_total,
                n => {
                    let prev = obs.visible_history[n - 2].realized_total as f64;
                    last_total + (last_total - prev)
                }
            };
            (1.0 - params.anchor_weight - params.trend_weight) * prior
                + params.anchor_weight * last_total
                + params.trend_weight * trend
        }
    };
    if params.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(obs.stream_seed);
        let z: f64 = StandardNormal.sample(&mut rng);
        value += params.noise * z;
    }
    Ok(value.round().clamp(0.0, k) as usize)
}
