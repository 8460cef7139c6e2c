//! Weighted channel integration, feature mapping, perturbed scenario
//! generation and utility-ranked selection.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityWeights {
    pub alpha_s: f64,
    pub alpha_i: f64,
    pub alpha_h: f64,
}

impl Default for ModalityWeights {
    fn default() -> Self {
        ModalityWeights {
            alpha_s: 0.8,
            alpha_i: 0.1,
            alpha_h: 0.1,
        }
    }
}

impl ModalityWeights {
    pub fn new(alpha_s: f64, alpha_i: f64, alpha_h: f64) -> Result<Self> {
        let w = ModalityWeights {
            alpha_s,
            alpha_i,
            alpha_h,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha_s, self.alpha_i, self.alpha_h];
        if all.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::config("weights", "every alpha must be non-negative"));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::config("weights", format!("alphas sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Elementwise `alpha_s * s + alpha_i * i + alpha_h * h`.
pub fn integrate(s: &[f64], i: &[f64], h: &[f64], w: ModalityWeights) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::EmptyInput("integration needs at least one component"));
    }
    check_len(s.len(), i.len())?;
    check_len(s.len(), h.len())?;
    Ok(s.iter()
        .zip(i)
        .zip(h)
        .map(|((s, i), h)| w.alpha_s * s + w.alpha_i * i + w.alpha_h * h)
        .collect())
}

/// Two-decimal rounding, half away from zero.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn semantic_features(u: &[f64]) -> Vec<f64> {
    u.iter().copied().map(round2).collect()
}

pub fn feature_map(u: &[f64]) -> Vec<f64> {
    u.iter().map(|x| (-x).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub m: Vec<f64>,
    pub r: Vec<f64>,
}

impl FeatureMap {
    pub fn from_unified(u: &[f64]) -> Self {
        FeatureMap {
            m: feature_map(u),
            r: semantic_features(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub index: usize,
    pub attributes: Vec<f64>,
    pub utility: f64,
}

impl Scenario {
    pub fn new(index: usize, attributes: Vec<f64>) -> Self {
        let utility = scenario_utility(&attributes);
        Scenario {
            index,
            attributes,
            utility,
        }
    }
}

/// `count` scenarios, each `m` plus independent noise on `[-noise_width, noise_width)`.
pub fn generate_scenarios(m: &[f64], count: usize, noise_width: f64, rng_seed: u64) -> Vec<Scenario> {
    let mut rng = seed::rng(rng_seed, "scenario", &[]);
    generate_scenarios_with(m, count, noise_width, &mut rng)
}

pub fn generate_scenarios_with<R: Rng>(
    m: &[f64],
    count: usize,
    noise_width: f64,
    rng: &mut R,
) -> Vec<Scenario> {
    (0..count)
        .map(|j| {
            let attributes = m
                .iter()
                .map(|mk| {
                    if noise_width > 0.0 {
                        mk + rng.random_range(-noise_width..noise_width)
                    } else {
                        *mk
                    }
                })
                .collect();
            Scenario::new(j, attributes)
        })
        .collect()
}

pub fn scenario_utility(attributes: &[f64]) -> f64 {
    if attributes.len() <= 1000 {
        return attributes.iter().sum();
    }
    // Neumaier compensated summation
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in attributes {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Descending utility, ascending index on ties.
pub(crate) fn by_utility(a: &Scenario, b: &Scenario) -> Ordering {
    b.utility
        .total_cmp(&a.utility)
        .then_with(|| a.index.cmp(&b.index))
}

pub fn select_top_k(scenarios: &[Scenario], k: usize) -> Result<Vec<Scenario>> {
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    let mut sorted = scenarios.to_vec();
    sorted.sort_by(by_utility);
    sorted.truncate(k);
    Ok(sorted)
}
