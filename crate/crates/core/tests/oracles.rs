//! Exact-agreement checks against independent brute-force implementations.

use msr_core::attention::{relevance_scores, top_k_by_relevance};
use msr_core::memory::{MemoryConfig, MemoryStore};
use msr_core::scenario::{select_top_k, Scenario};
use msr_core::seed;
use msr_core::sim2real::{optimize_with_rewards, refine_policy, Action, GridEnv, Reward, RewardTable};
use rand::Rng;

fn grid(start: (usize, usize), goal: (usize, usize), slip: f64, horizon: usize) -> GridEnv {
    GridEnv {
        width: 3,
        height: 3,
        start,
        goal,
        step_reward: -1.0,
        goal_reward: 10.0,
        slip_prob: slip,
        horizon,
    }
}

/// Successor cells under the oracle's own reading of the dynamics.
fn outcomes(env: &GridEnv, c: (usize, usize), a: usize) -> Vec<((usize, usize), f64)> {
    if c == env.goal {
        return vec![(c, 1.0)];
    }
    let mv = |d: usize| {
        let (dx, dy): (i64, i64) = [(0, -1), (0, 1), (-1, 0), (1, 0)][d];
        let (x, y) = (c.0 as i64 + dx, c.1 as i64 + dy);
        if x < 0 || y < 0 || x >= env.width as i64 || y >= env.height as i64 {
            c
        } else {
            (x as usize, y as usize)
        }
    };
    let side = if a < 2 { [2, 3] } else { [0, 1] };
    let mut out = vec![(mv(a), 1.0 - env.slip_prob)];
    if env.slip_prob > 0.0 {
        out.extend(side.iter().map(|&d| (mv(d), env.slip_prob / 2.0)));
    }
    out
}

/// Exhaustive search over every action at every node of the outcome tree.
fn brute_value(env: &GridEnv, rewards: &RewardTable, gamma: f64, c: (usize, usize), steps: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    let s = c.1 * env.width + c.0;
    (0..4)
        .map(|a| {
            let future: f64 = outcomes(env, c, a)
                .into_iter()
                .map(|(n, p)| p * brute_value(env, rewards, gamma, n, steps - 1))
                .sum();
            rewards.rows[s][a] + gamma * future
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_table<R: Rng>(rng: &mut R, n: usize) -> RewardTable {
    RewardTable { rows: (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-5.0..5.0))).collect() }
}

fn random_cell<R: Rng>(rng: &mut R) -> (usize, usize) {
    (rng.random_range(0..3), rng.random_range(0..3))
}

#[test]
fn value_iteration_matches_path_enumeration() {
    let mut rng = seed::rng(7, "oracle-vi", &[]);
    for case in 0..48 {
        let deterministic = case % 2 == 0;
        let horizon = if deterministic { 1 + case % 8 } else { 1 + case % 4 };
        let start = random_cell(&mut rng);
        let mut goal = random_cell(&mut rng);
        while goal == start {
            goal = random_cell(&mut rng);
        }
        let slip = if deterministic { 0.0 } else { rng.random_range(0.0..0.5) };
        let env = grid(start, goal, slip, horizon);
        let gamma = rng.random_range(0.0..=1.0);
        let rewards = if case % 3 == 0 { env.reward_table() } else { random_table(&mut rng, 9) };
        let policy = optimize_with_rewards(&env, &rewards, gamma).unwrap();
        for s in 0..9 {
            let oracle = brute_value(&env, &rewards, gamma, (s % 3, s / 3), horizon);
            let got = policy.value(s);
            assert!((got - oracle).abs() <= 1e-9, "case {case} state {s}: {got} vs {oracle}");
        }
    }
}

#[test]
fn shortest_path_return_on_3x3() {
    let env = grid((0, 0), (2, 2), 0.0, 8);
    let p = optimize_with_rewards(&env, &env.reward_table(), 1.0).unwrap();
    assert_eq!(p.value(0), 6.0);
    assert_eq!(brute_value(&env, &env.reward_table(), 1.0, (0, 0), 8), 6.0);
}

/// Cells visited by the greedy policy on a slip-free grid.
fn path(env: &GridEnv, policy: &msr_core::sim2real::PolicyTable) -> Vec<(usize, usize)> {
    let mut c = env.start;
    let mut out = vec![c];
    for remaining in (1..=env.horizon).rev() {
        if c == env.goal {
            break;
        }
        c = env.step_cell(c, policy.action(env.state(c), remaining));
        out.push(c);
    }
    out
}

#[test]
fn bonus_cell_reroutes_only_when_worth_the_detour() {
    // Direct route: two steps. Through the centre: four, so two extra steps
    // of cost 1 each.
    let env = grid((0, 0), (2, 0), 0.0, 4);
    let mut delta = RewardTable::filled(9, 0.0);
    delta.rows[env.state((1, 1))] = [5.0; 4];
    let delta = Reward::Table(delta.clone());
    for (alpha, detours) in [(1.0, true), (0.2, false), (0.3, false), (0.5, true)] {
        let refined = refine_policy(&env, &delta, alpha, 1.0).unwrap();
        let visits = path(&env, &refined).contains(&(1, 1));
        assert_eq!(visits, detours, "alpha {alpha}");
        let Reward::Table(t) = &delta else { unreachable!() };
        let mut shaped = env.reward_table();
        for (row, d) in shaped.rows.iter_mut().zip(&t.rows) {
            for (r, d) in row.iter_mut().zip(d) {
                *r += alpha * d;
            }
        }
        let oracle = brute_value(&env, &shaped, 1.0, env.start, env.horizon);
        assert!((refined.value(0) - oracle).abs() <= 1e-9);
    }
}

fn unit_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(a, b)| a * b).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn ltm_retrieval_matches_linear_scan() {
    let mut rng = seed::rng(11, "oracle-ltm", &[]);
    for case in 0..60 {
        let dim = rng.random_range(1..=16);
        let size = if case == 0 { 1024 } else { rng.random_range(1..=1024) };
        let capacity = rng.random_range(1..=32);
        let mut store = MemoryStore::new(MemoryConfig { stm_capacity: capacity, ..MemoryConfig::default() }).unwrap();
        let seeded = rng.random_range(0..=size);
        for i in 0..seeded {
            store.seed_ltm(unit_vec(&mut rng, dim), i).unwrap();
        }
        // The rest enter through short-term memory and get evicted.
        while store.ltm().len() < size {
            store.stm_append(unit_vec(&mut rng, dim), 0).unwrap();
        }
        for _ in 0..8 {
            let q = unit_vec(&mut rng, dim);
            let (entry, score) = store.ltm_retrieve(&q).unwrap();
            let mut best: Option<(u64, f64)> = None;
            for e in store.ltm() {
                let s = cosine(&q, &e.vector);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((e.timestamp, s));
                }
            }
            let (ts, s) = best.unwrap();
            assert!((score - s).abs() <= 1e-9, "case {case}");
            assert_eq!(entry.timestamp, ts, "case {case}");
        }
    }
}

fn oracle_top_k(us: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..us.len()).collect();
    idx.sort_by(|&a, &b| us[b].partial_cmp(&us[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[test]
fn relevance_top_k_equals_utility_top_k() {
    let mut rng = seed::rng(13, "oracle-topk", &[]);
    for case in 0..10_000 {
        let n = rng.random_range(1..=64);
        let us: Vec<f64> = match case % 4 {
            0 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            1 => (0..n).map(|_| rng.random_range(-1e3..1e3)).collect(),
            // heavy ties
            2 => (0..n).map(|_| rng.random_range(0..4) as f64).collect(),
            // far apart: most relevances underflow to zero
            _ => (0..n).map(|_| rng.random_range(-1e4..1e4f64).round()).collect(),
        };
        let k = rng.random_range(1..=n);
        let scenarios: Vec<Scenario> = us.iter().enumerate().map(|(i, u)| Scenario::new(i, vec![*u])).collect();
        let by_utility: Vec<usize> = select_top_k(&scenarios, k).unwrap().iter().map(|s| s.index).collect();
        let dist = relevance_scores(&us).unwrap();
        let by_relevance: Vec<usize> =
            top_k_by_relevance(&dist, &scenarios, k).unwrap().iter().map(|s| s.index).collect();
        let oracle = oracle_top_k(&us, k);
        assert_eq!(by_utility, oracle, "case {case}");
        assert_eq!(by_relevance, oracle, "case {case}");
    }
}

#[test]
fn greedy_when_gamma_is_zero() {
    let mut rng = seed::rng(17, "oracle-greedy", &[]);
    for _ in 0..20 {
        let env = grid((0, 0), (2, 2), 0.1, 5);
        let t = random_table(&mut rng, 9);
        let p = optimize_with_rewards(&env, &t, 0.0).unwrap();
        for s in 0..9 {
            let best = (0..4).fold(0, |b, a| if t.rows[s][a] > t.rows[s][b] { a } else { b });
            assert_eq!(p.first_action(s), Action::ALL[best]);
        }
    }
}
