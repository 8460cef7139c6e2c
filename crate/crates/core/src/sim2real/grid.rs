use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    /// Fixed order used for greedy tie-breaking.
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }

    fn perpendicular(self) -> [Action; 2] {
        match self {
            Action::Up | Action::Down => [Action::Left, Action::Right],
            Action::Left | Action::Right => [Action::Up, Action::Down],
        }
    }
}

pub type Cell = (usize, usize);

/// Gridworld with an absorbing goal. Episodes always last `horizon` steps;
/// once at the goal the agent stays there and collects that state's row of
/// the reward table (zero in [`GridEnv::reward_table`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEnv {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal: Cell,
    pub step_reward: f64,
    pub goal_reward: f64,
    /// Probability of sliding to one of the two perpendicular neighbours.
    pub slip_prob: f64,
    pub horizon: usize,
}

impl GridEnv {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.width, self.height);
        if w == 0 || h == 0 {
            return Err(Error::config("grid", "width and height must be at least 1"));
        }
        for (name, c) in [("grid.start", self.start), ("grid.goal", self.goal)] {
            if c.0 >= w || c.1 >= h {
                return Err(Error::config(name, format!("{c:?} is outside the {w}x{h} grid")));
            }
        }
        if self.start == self.goal {
            return Err(Error::config("grid.goal", "must differ from start"));
        }
        if self.horizon == 0 {
            return Err(Error::config("grid.horizon", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.slip_prob) {
            return Err(Error::config("grid.slip_prob", "must lie in [0, 1)"));
        }
        if !(self.step_reward.is_finite() && self.goal_reward.is_finite()) {
            return Err(Error::config("grid", "rewards must be finite"));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn state(&self, c: Cell) -> usize {
        c.1 * self.width + c.0
    }

    pub fn cell(&self, s: usize) -> Cell {
        (s % self.width, s / self.width)
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.0 < self.width && c.1 < self.height
    }

    pub fn goal_state(&self) -> usize {
        self.state(self.goal)
    }

    /// Deterministic move; walls block.
    pub fn step_cell(&self, c: Cell, a: Action) -> Cell {
        let (dx, dy) = a.delta();
        let x = c.0 as isize + dx;
        let y = c.1 as isize + dy;
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            c
        } else {
            (x as usize, y as usize)
        }
    }

    /// `(next_state, probability)` pairs.
    pub fn transitions(&self, s: usize, a: Action) -> Vec<(usize, f64)> {
        if s == self.goal_state() {
            return vec![(s, 1.0)];
        }
        let c = self.cell(s);
        let mut out = vec![(self.state(self.step_cell(c, a)), 1.0 - self.slip_prob)];
        if self.slip_prob > 0.0 {
            for p in a.perpendicular() {
                out.push((self.state(self.step_cell(c, p)), self.slip_prob / 2.0));
            }
        }
        out
    }

    /// Expected immediate reward of every `(state, action)` pair.
    pub fn reward_table(&self) -> RewardTable {
        let goal = self.goal_state();
        let rows = (0..self.n_states())
            .map(|s| {
                let mut row = [0.0; 4];
                if s != goal {
                    for a in Action::ALL {
                        let p_goal: f64 = self
                            .transitions(s, a)
                            .iter()
                            .filter(|(n, _)| *n == goal)
                            .map(|(_, p)| p)
                            .sum();
                        row[a.index()] = self.step_reward + self.goal_reward * p_goal;
                    }
                }
                row
            })
            .collect();
        RewardTable { rows }
    }

    fn sample_next<R: Rng>(&self, s: usize, a: Action, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let ts = self.transitions(s, a);
        for &(n, p) in &ts {
            acc += p;
            if u < acc {
                return n;
            }
        }
        ts.last().map_or(s, |t| t.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    pub rows: Vec<[f64; 4]>,
}

impl RewardTable {
    pub fn filled(n_states: usize, value: f64) -> Self {
        RewardTable { rows: vec![[value; 4]; n_states] }
    }

    pub fn get(&self, s: usize, a: Action) -> f64 {
        self.rows[s][a.index()]
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub width: usize,
    pub gamma: f64,
    /// `actions[t - 1][s]` is the greedy action with `t` steps remaining.
    pub actions: Vec<Vec<Action>>,
    /// `values[t][s]`, with `values[0]` all zero.
    pub values: Vec<Vec<f64>>,
}

impl PolicyTable {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn n_states(&self) -> usize {
        self.values[0].len()
    }

    pub fn action(&self, s: usize, remaining: usize) -> Action {
        self.actions[remaining - 1][s]
    }

    /// Action with the full horizon remaining.
    pub fn first_action(&self, s: usize) -> Action {
        self.action(s, self.horizon())
    }

    pub fn value(&self, s: usize) -> f64 {
        self.values[self.horizon()][s]
    }
}

/// Exact backward induction on an arbitrary reward table.
pub fn optimize_with_rewards(env: &GridEnv, rewards: &RewardTable, gamma: f64) -> Result<PolicyTable> {
    env.validate()?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config("gamma", format!("{gamma} is outside [0, 1]")));
    }
    let n = env.n_states();
    if rewards.n_states() != n {
        return Err(Error::Shape { expected: n, got: rewards.n_states() });
    }
    let transitions: Vec<Vec<Vec<(usize, f64)>>> = (0..n)
        .map(|s| Action::ALL.iter().map(|&a| env.transitions(s, a)).collect())
        .collect();
    let mut values = vec![vec![0.0; n]];
    let mut actions = Vec::with_capacity(env.horizon);
    for _ in 0..env.horizon {
        let prev = values.last().expect("values starts non-empty");
        let mut v = vec![0.0; n];
        let mut pi = vec![Action::Up; n];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in Action::ALL {
                let future: f64 = transitions[s][a.index()].iter().map(|(ns, p)| p * prev[*ns]).sum();
                let q = rewards.get(s, a) + gamma * future;
                if q > best {
                    best = q;
                    pi[s] = a;
                }
            }
            v[s] = best;
        }
        values.push(v);
        actions.push(pi);
    }
    Ok(PolicyTable { width: env.width, gamma, actions, values })
}

pub fn optimize_policy(env: &GridEnv, gamma: f64) -> Result<PolicyTable> {
    optimize_with_rewards(env, &env.reward_table(), gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }
}

/// Samples one episode of `policy` in `env`, stopping early at the goal.
pub fn rollout<R: Rng>(env: &GridEnv, policy: &PolicyTable, rng: &mut R) -> Trajectory {
    let goal = env.goal_state();
    let mut s = env.state(env.start);
    let mut steps = Vec::new();
    for remaining in (1..=policy.horizon().min(env.horizon)).rev() {
        if s == goal {
            break;
        }
        let a = policy.action(s, remaining);
        let next = env.sample_next(s, a, rng);
        let reward = env.step_reward + if next == goal { env.goal_reward } else { 0.0 };
        steps.push(Step { state: s, action: a, reward });
        s = next;
    }
    Trajectory { steps }
}

pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}
