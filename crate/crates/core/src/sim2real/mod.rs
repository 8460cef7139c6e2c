//! Domain-randomized gridworlds, exact finite-horizon policy optimization,
//! reward-discrepancy correction and adversarial feature alignment.
//!
//! The "real" environment is a second [`GridEnv`] whose parameters differ
//! from the simulator's. Re-planning optimizes `R_real + alpha * delta`
//! under the real environment's transitions.

pub mod align;
mod grid;
mod randomize;

pub use align::{align_features, AlignConfig, AlignmentModel, AlignmentOutcome};
pub use grid::{
    discounted_return, optimize_policy, optimize_with_rewards, rollout, Action, Cell, GridEnv,
    PolicyTable, RewardTable, Step, Trajectory,
};
pub use randomize::{randomize_env, HorizonVariant, RandomizationSpec, Variation, MAX_SLIP};

use crate::error::{Error, Result};

/// A reward signal: one scalar, or one value per `(state, action)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Reward {
    Scalar(f64),
    Table(RewardTable),
}

/// `real - sim`, elementwise.
pub fn reward_discrepancy(real: &Reward, sim: &Reward) -> Result<Reward> {
    match (real, sim) {
        (Reward::Scalar(r), Reward::Scalar(s)) => Ok(Reward::Scalar(r - s)),
        (Reward::Table(r), Reward::Table(s)) => {
            if r.n_states() != s.n_states() {
                return Err(Error::Shape { expected: r.n_states(), got: s.n_states() });
            }
            let rows = r
                .rows
                .iter()
                .zip(&s.rows)
                .map(|(r, s)| std::array::from_fn(|a| r[a] - s[a]))
                .collect();
            Ok(Reward::Table(RewardTable { rows }))
        }
        _ => Err(Error::InvalidInput("cannot subtract a scalar reward from a table".into())),
    }
}

/// Re-plans on the real environment with rewards `R_real + alpha * delta`.
pub fn refine_policy(env_real: &GridEnv, delta: &Reward, alpha: f64, gamma: f64) -> Result<PolicyTable> {
    let mut rewards = env_real.reward_table();
    match delta {
        Reward::Scalar(d) => {
            for row in &mut rewards.rows {
                for r in row.iter_mut() {
                    *r += alpha * d;
                }
            }
        }
        Reward::Table(t) => {
            if t.n_states() != rewards.n_states() {
                return Err(Error::Shape { expected: rewards.n_states(), got: t.n_states() });
            }
            for (row, d) in rewards.rows.iter_mut().zip(&t.rows) {
                for (r, d) in row.iter_mut().zip(d) {
                    *r += alpha * d;
                }
            }
        }
    }
    optimize_with_rewards(env_real, &rewards, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn grid3() -> GridEnv {
        GridEnv {
            width: 3,
            height: 3,
            start: (0, 0),
            goal: (2, 2),
            step_reward: -1.0,
            goal_reward: 10.0,
            slip_prob: 0.0,
            horizon: 6,
        }
    }

    #[test]
    fn adjacent_goal() {
        let env = GridEnv { width: 2, height: 1, goal: (1, 0), ..grid3() };
        let p = optimize_policy(&env, 0.9).unwrap();
        assert_eq!(p.first_action(env.state(env.start)), Action::Right);
        assert_eq!(p.value(0), 9.0);
    }

    #[test]
    fn shortest_path_return() {
        let env = grid3();
        let p = optimize_policy(&env, 1.0).unwrap();
        assert_eq!(p.value(0), 6.0);
        // tie between down and right at the corner goes to down
        assert_eq!(p.first_action(0), Action::Down);
    }

    #[test]
    fn greedy_at_zero_discount() {
        let mut env = grid3();
        env.slip_prob = 0.2;
        let p = optimize_policy(&env, 0.0).unwrap();
        let r = env.reward_table();
        for s in 0..env.n_states() {
            let mut best = Action::Up;
            for a in Action::ALL {
                if r.get(s, a) > r.get(s, best) {
                    best = a;
                }
            }
            assert_eq!(p.first_action(s), best, "state {s}");
        }
    }

    #[test]
    fn returns() {
        assert_eq!(discounted_return(&[1.0, 2.0, 3.0], 1.0), 6.0);
        assert_eq!(discounted_return(&[5.0, 9.0, 9.0], 0.0), 5.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
    }

    #[test]
    fn rollout_is_legal() {
        let mut env = grid3();
        env.slip_prob = 0.3;
        let p = optimize_policy(&env, 0.95).unwrap();
        let mut rng = crate::seed::rng(5, "t", &[]);
        for _ in 0..50 {
            let t = rollout(&env, &p, &mut rng);
            assert!(t.steps.len() <= env.horizon);
            for w in t.steps.windows(2) {
                let (a, b) = (env.cell(w[0].state), env.cell(w[1].state));
                assert!(a.0.abs_diff(b.0) + a.1.abs_diff(b.1) <= 1);
            }
        }
    }

    #[test]
    fn degenerate_randomization_is_identity() {
        let base = GridEnv { slip_prob: 0.1, ..grid3() };
        let mut continuous = BTreeMap::new();
        for k in ["step_reward", "goal_reward", "slip_prob"] {
            continuous.insert(k.to_string(), Variation { mu: 0.0, sigma: 0.0 });
        }
        let spec = RandomizationSpec {
            continuous,
            horizon_variants: vec![HorizonVariant { horizon: base.horizon, p: 1.0 }],
            seed: 11,
        };
        assert_eq!(randomize_env(&base, &spec).unwrap(), base);
    }

    #[test]
    fn randomization_clamps_and_repeats() {
        let base = grid3();
        let mut continuous = BTreeMap::new();
        continuous.insert("slip_prob".to_string(), Variation { mu: 0.0, sigma: 50.0 });
        let mut saw_high = false;
        let mut saw_low = false;
        for seed in 0..40 {
            let spec = RandomizationSpec { continuous: continuous.clone(), horizon_variants: vec![], seed };
            let env = randomize_env(&base, &spec).unwrap();
            assert!((0.0..=MAX_SLIP).contains(&env.slip_prob));
            saw_high |= env.slip_prob == MAX_SLIP;
            saw_low |= env.slip_prob == 0.0;
            assert_eq!(env, randomize_env(&base, &spec).unwrap());
        }
        assert!(saw_high && saw_low);
        let mut bad = BTreeMap::new();
        bad.insert("gravity".to_string(), Variation { mu: 0.0, sigma: 1.0 });
        let spec = RandomizationSpec { continuous: bad, ..Default::default() };
        assert!(matches!(randomize_env(&base, &spec), Err(Error::Config { .. })));
    }

    #[test]
    fn discrepancy() {
        assert_eq!(reward_discrepancy(&Reward::Scalar(0.4), &Reward::Scalar(0.4)).unwrap(), Reward::Scalar(0.0));
        match reward_discrepancy(&Reward::Scalar(1.0), &Reward::Scalar(0.8)).unwrap() {
            Reward::Scalar(d) => assert!((d - 0.2).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let sim = grid3().reward_table();
        let mut real = sim.clone();
        real.rows[4][2] += 0.5;
        let Reward::Table(d) = reward_discrepancy(&Reward::Table(real), &Reward::Table(sim.clone())).unwrap() else {
            panic!("expected table")
        };
        for (s, row) in d.rows.iter().enumerate() {
            for (a, v) in row.iter().enumerate() {
                assert_eq!(*v, if (s, a) == (4, 2) { 0.5 } else { 0.0 });
            }
        }
        let short = RewardTable::filled(2, 0.0);
        assert!(reward_discrepancy(&Reward::Table(short), &Reward::Table(sim)).is_err());
    }

    #[test]
    fn refine_with_zero_or_constant_delta() {
        let env = GridEnv { slip_prob: 0.1, ..grid3() };
        let base = optimize_policy(&env, 0.9).unwrap();
        let zero = refine_policy(&env, &Reward::Scalar(0.0), 0.7, 0.9).unwrap();
        assert_eq!(zero, base);
        let table = refine_policy(&env, &Reward::Table(RewardTable::filled(9, 0.0)), 0.7, 0.9).unwrap();
        assert_eq!(table, base);
        let shifted = refine_policy(&env, &Reward::Scalar(0.5), 1.0, 0.9).unwrap();
        assert_eq!(shifted.actions, base.actions);
    }
}
