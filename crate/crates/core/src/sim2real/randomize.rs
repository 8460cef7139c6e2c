use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::grid::GridEnv;
use crate::error::{Error, Result};
use crate::seed;

pub const MAX_SLIP: f64 = 0.95;

/// Gaussian variation added to a base parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variation {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonVariant {
    pub horizon: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationSpec {
    /// Keyed by `step_reward`, `goal_reward` or `slip_prob`.
    pub continuous: BTreeMap<String, Variation>,
    /// Categorical distribution over horizons; empty keeps the base horizon.
    pub horizon_variants: Vec<HorizonVariant>,
    pub seed: u64,
}

const PARAMS: [&str; 3] = ["goal_reward", "slip_prob", "step_reward"];

impl RandomizationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in &self.continuous {
            if !PARAMS.contains(&name.as_str()) {
                return Err(Error::config(
                    format!("randomization.continuous.{name}"),
                    "unknown environment parameter",
                ));
            }
            if !(v.sigma.is_finite() && v.sigma >= 0.0 && v.mu.is_finite()) {
                return Err(Error::config(
                    format!("randomization.continuous.{name}"),
                    "sigma must be non-negative and mu finite",
                ));
            }
        }
        if !self.horizon_variants.is_empty() {
            if self.horizon_variants.iter().any(|v| v.horizon == 0 || v.p.is_nan() || v.p < 0.0) {
                return Err(Error::config(
                    "randomization.horizon_variants",
                    "horizons must be positive and probabilities non-negative",
                ));
            }
            let total: f64 = self.horizon_variants.iter().map(|v| v.p).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    "randomization.horizon_variants",
                    format!("probabilities sum to {total}, not 1"),
                ));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        RandomizationSpec { seed, ..self.clone() }
    }
}

pub fn randomize_env(base: &GridEnv, spec: &RandomizationSpec) -> Result<GridEnv> {
    spec.validate()?;
    base.validate()?;
    let mut rng = seed::rng(spec.seed, "randomize", &[]);
    let mut env = base.clone();
    for (name, v) in &spec.continuous {
        let z: f64 = rng.sample(StandardNormal);
        let shift = v.mu + v.sigma * z;
        match name.as_str() {
            "step_reward" => env.step_reward = base.step_reward + shift,
            "goal_reward" => env.goal_reward = (base.goal_reward + shift).max(0.0),
            "slip_prob" => env.slip_prob = (base.slip_prob + shift).clamp(0.0, MAX_SLIP),
            _ => unreachable!("validated above"),
        }
    }
    if !spec.horizon_variants.is_empty() {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        env.horizon = spec.horizon_variants.last().map_or(base.horizon, |v| v.horizon);
        for v in &spec.horizon_variants {
            acc += v.p;
            if u < acc {
                env.horizon = v.horizon;
                break;
            }
        }
    }
    Ok(env)
}
