//! Softmax relevance over scenario utilities, hard top-k truncation and
//! memory-guided refinement.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceDistribution(Vec<f64>);

impl RelevanceDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Max-subtracted softmax.
pub fn softmax(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("softmax over an empty list"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("softmax input must be finite".into()));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub fn relevance_scores(utilities: &[f64]) -> Result<RelevanceDistribution> {
    softmax(utilities).map(RelevanceDistribution)
}

/// Top-k by relevance. Relevance ties (including underflow to zero) fall
/// back to utility and then index, so the selection always equals
/// [`crate::scenario::select_top_k`] on the same scenarios.
pub fn top_k_by_relevance(
    dist: &RelevanceDistribution,
    scenarios: &[Scenario],
    k: usize,
) -> Result<Vec<Scenario>> {
    check_len(scenarios.len(), dist.len())?;
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    let mut order: Vec<usize> = (0..scenarios.len()).collect();
    order.sort_by(|&a, &b| {
        dist.0[b]
            .total_cmp(&dist.0[a])
            .then_with(|| crate::scenario::by_utility(&scenarios[a], &scenarios[b]))
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| scenarios[i].clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedScenario {
    pub base: Scenario,
    pub attributes: Vec<f64>,
    pub beta: f64,
}

/// Convex blend `(1 - beta) * a + beta * m`.
pub fn refine_scenario(a: &[f64], m: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_len(a.len(), m.len())?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::config("beta", format!("{beta} is outside [0, 1]")));
    }
    Ok(a.iter()
        .zip(m)
        .map(|(a, m)| (1.0 - beta) * a + beta * m)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::select_top_k;

    fn scen(us: &[f64]) -> Vec<Scenario> {
        us.iter()
            .enumerate()
            .map(|(index, &utility)| Scenario { index, attributes: vec![], utility })
            .collect()
    }

    #[test]
    fn softmax_examples() {
        let r = relevance_scores(&[1.0, 1.0, 1.0]).unwrap();
        assert!(r.as_slice().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let r = relevance_scores(&[2f64.ln(), 0.0]).unwrap();
        assert!((r.as_slice()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.as_slice()[1] - 1.0 / 3.0).abs() < 1e-15);
        let r = relevance_scores(&[1000.0, 1000.0]).unwrap();
        assert_eq!(r.as_slice(), &[0.5, 0.5]);
        assert!(matches!(relevance_scores(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn selection_matches_utility_top_k() {
        let s = scen(&[0.0, 1.0]);
        let d = relevance_scores(&[0.0, 1.0]).unwrap();
        assert_eq!(top_k_by_relevance(&d, &s, 1).unwrap()[0].index, 1);
        assert_eq!(top_k_by_relevance(&d, &s, 5).unwrap().len(), 2);
        // underflowed relevances still order by utility
        let s = scen(&[0.0, -900.0, -800.0, 5.0]);
        let d = relevance_scores(&[0.0, -900.0, -800.0, 5.0]).unwrap();
        assert_eq!(top_k_by_relevance(&d, &s, 4).unwrap(), select_top_k(&s, 4).unwrap());
        assert!(matches!(top_k_by_relevance(&d, &s[..2], 1), Err(Error::Shape { .. })));
    }

    #[test]
    fn refine_endpoints() {
        let a = [1.0, 0.0];
        let m = [0.0, 1.0];
        assert_eq!(refine_scenario(&a, &m, 0.0).unwrap(), a.to_vec());
        assert_eq!(refine_scenario(&a, &m, 1.0).unwrap(), m.to_vec());
        assert_eq!(refine_scenario(&a, &m, 0.5).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(refine_scenario(&a, &[1.0], 0.5), Err(Error::Shape { .. })));
    }
}
