//! The run configuration: one JSON document, unknown keys rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::GeneratorConfig;
use crate::decision::{ContextWeights, Subtask, SubtaskSpec, TaskLibrary, TaskTemplate};
use crate::error::{Error, Result};
use crate::ingest::{ExtractionMode, TrustThreshold};
use crate::memory::MemoryConfig;
use crate::scenario::ModalityWeights;
use crate::sim2real::{Action, Cell, GridEnv, HorizonVariant, RandomizationSpec, Variation};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionConfig {
    /// Weights over the context factors `[utility, memory agreement, priority]`.
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub task: String,
    /// Empty means one subtask per action, each reading its action axis.
    pub tasks: TaskLibrary,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            weights: vec![1.0 / 3.0; 3],
            lambda: 0.4,
            task: "respond".into(),
            tasks: TaskLibrary::default(),
        }
    }
}

/// The simulator's base grid. The goal is placed `goal_distance` cells from
/// `start` in the direction of the chosen decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal_distance: usize,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub slip_prob: f64,
    pub horizon: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            width: 5,
            height: 5,
            start: (2, 2),
            goal_distance: 2,
            step_reward: -1.0,
            goal_reward: 10.0,
            slip_prob: 0.05,
            horizon: 8,
        }
    }
}

impl GridConfig {
    pub fn env_for(&self, action: Action) -> Result<GridEnv> {
        let (dx, dy) = action.delta();
        let reach = self.goal_distance as isize;
        let gx = self.start.0 as isize + dx * reach;
        let gy = self.start.1 as isize + dy * reach;
        if gx < 0 || gy < 0 || gx >= self.width as isize || gy >= self.height as isize {
            return Err(Error::config(
                "sim2real.grid.goal_distance",
                format!("goal for {action:?} falls outside the {}x{} grid", self.width, self.height),
            ));
        }
        let env = GridEnv {
            width: self.width,
            height: self.height,
            start: self.start,
            goal: (gx as usize, gy as usize),
            step_reward: self.step_reward,
            goal_reward: self.goal_reward,
            slip_prob: self.slip_prob,
            horizon: self.horizon,
        };
        env.validate()?;
        Ok(env)
    }
}

/// Parameters of the deployment environment that differ from the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealEnvConfig {
    pub step_reward: f64,
    pub goal_reward: f64,
    pub slip_prob: f64,
}

impl Default for RealEnvConfig {
    fn default() -> Self {
        RealEnvConfig { step_reward: -1.2, goal_reward: 10.0, slip_prob: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim2RealConfig {
    pub grid: GridConfig,
    pub real: RealEnvConfig,
    /// The per-record seed replaces `randomization.seed`.
    pub randomization: RandomizationSpec,
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for Sim2RealConfig {
    fn default() -> Self {
        let continuous = BTreeMap::from([
            ("step_reward".to_string(), Variation { mu: 0.0, sigma: 0.2 }),
            ("slip_prob".to_string(), Variation { mu: 0.0, sigma: 0.05 }),
        ]);
        Sim2RealConfig {
            grid: GridConfig::default(),
            real: RealEnvConfig::default(),
            randomization: RandomizationSpec {
                continuous,
                horizon_variants: vec![
                    HorizonVariant { horizon: 8, p: 0.7 },
                    HorizonVariant { horizon: 10, p: 0.3 },
                ],
                seed: 0,
            },
            gamma: 0.95,
            alpha: 0.5,
        }
    }
}

impl Sim2RealConfig {
    pub fn real_env(&self, sim: &GridEnv) -> Result<GridEnv> {
        let env = GridEnv {
            step_reward: self.real.step_reward,
            goal_reward: self.real.goal_reward,
            slip_prob: self.real.slip_prob,
            ..sim.clone()
        };
        env.validate()?;
        Ok(env)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. `--seed` and `MSR_SEED` take precedence.
    pub seed: Option<u64>,
    /// Dataset file to run on. When absent the dataset is generated from `generator`.
    pub dataset: Option<PathBuf>,
    pub generator: GeneratorConfig,
    pub tau: f64,
    pub extraction: ExtractionMode,
    pub weights: ModalityWeights,
    /// Internal-state channel; empty means zeros.
    pub internal_state: Vec<f64>,
    /// Instruction channel; empty means zeros.
    pub instruction: Vec<f64>,
    pub m_count: usize,
    pub k: usize,
    pub noise_width: f64,
    pub relevance_threshold: f64,
    pub beta: f64,
    pub memory: MemoryConfig,
    pub decision: DecisionConfig,
    pub sim2real: Sim2RealConfig,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            dataset: None,
            generator: GeneratorConfig::default(),
            tau: 0.5,
            extraction: ExtractionMode::Identity,
            weights: ModalityWeights::default(),
            internal_state: Vec::new(),
            instruction: Vec::new(),
            m_count: 16,
            k: 4,
            noise_width: 0.1,
            relevance_threshold: 0.5,
            beta: 0.3,
            memory: MemoryConfig::default(),
            decision: DecisionConfig::default(),
            sim2real: Sim2RealConfig::default(),
            workers: None,
            out_dir: None,
        }
    }
}

fn check_unit(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} is outside [0, 1]")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks everything that does not depend on the dataset's dimensions.
    pub fn validate(&self) -> Result<()> {
        TrustThreshold::new(self.tau)?;
        self.weights.validate()?;
        if self.m_count == 0 {
            return Err(Error::config("m_count", "must be at least 1"));
        }
        if self.k == 0 || self.k > 2 * self.m_count {
            return Err(Error::config("k", format!("must lie in 1..={}", 2 * self.m_count)));
        }
        if !(self.noise_width.is_finite() && self.noise_width >= 0.0) {
            return Err(Error::config("noise_width", "must be non-negative"));
        }
        check_unit("relevance_threshold", self.relevance_threshold)?;
        check_unit("beta", self.beta)?;
        self.memory.validate()?;
        ContextWeights::new(self.decision.weights.clone(), self.decision.lambda)?;
        if self.decision.weights.len() != 3 {
            return Err(Error::config("decision.weights", "expected one weight per context factor (3)"));
        }
        if !self.decision.tasks.templates.is_empty() {
            self.decision.tasks.validate()?;
        }
        check_unit("sim2real.gamma", self.sim2real.gamma)?;
        if !(self.sim2real.alpha.is_finite() && self.sim2real.alpha >= 0.0) {
            return Err(Error::config("sim2real.alpha", "must be non-negative"));
        }
        self.sim2real.randomization.validate()?;
        for a in Action::ALL {
            let env = self.sim2real.grid.env_for(a)?;
            self.sim2real.real_env(&env)?;
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if self.dataset.is_none() {
            self.generator.validate()?;
        }
        Ok(())
    }

    /// The subtask list for the configured task, given the extracted feature
    /// width and the label space.
    pub fn subtasks(&self, dim: usize, n_mem: usize, n_actions: usize) -> Result<Vec<Subtask>> {
        let subtasks = if self.decision.tasks.templates.is_empty() {
            default_library(&self.decision.task, dim, n_mem, n_actions)?.decompose(&self.decision.task)?
        } else {
            self.decision.tasks.decompose(&self.decision.task)?
        };
        if subtasks.len() != n_actions {
            return Err(Error::config(
                "decision.tasks",
                format!("task `{}` expands to {} subtasks, expected one per action ({n_actions})", self.decision.task, subtasks.len()),
            ));
        }
        for s in &subtasks {
            if s.weights.len() != dim {
                return Err(Error::config(
                    "decision.tasks",
                    format!("subtask `{}` has {} weights, features have {dim}", s.id, s.weights.len()),
                ));
            }
        }
        Ok(subtasks)
    }
}

/// Merges `--seed`, `MSR_SEED` and the config value, in that order.
pub fn resolve_seed(flag: Option<u64>, env: Option<u64>, config: Option<u64>) -> u64 {
    flag.or(env).or(config).unwrap_or(DEFAULT_SEED)
}

fn default_library(task: &str, dim: usize, n_mem: usize, n_actions: usize) -> Result<TaskLibrary> {
    if dim < n_mem + n_actions {
        return Err(Error::config(
            "extraction",
            format!("{dim} features cannot hold {n_mem} memory and {n_actions} action axes"),
        ));
    }
    let subtasks = (0..n_actions)
        .map(|a| {
            let mut weights = vec![0.0; dim];
            weights[n_mem + a] = 1.0;
            SubtaskSpec::Leaf(Subtask { id: format!("action-{a}"), weights })
        })
        .collect();
    TaskLibrary::new(vec![TaskTemplate { id: task.to_string(), subtasks }])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_json(r#"{"tua": 0.5}"#).unwrap_err();
        assert!(err.to_string().contains("tua"), "{err}");
        let err = RunConfig::from_json(r#"{"sim2real": {"gama": 0.5}}"#).unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        for (json, field) in [
            (r#"{"tau": 1.5}"#, "tau"),
            (r#"{"k": 0}"#, "k"),
            (r#"{"weights": {"alpha_s": 0.5, "alpha_i": 0.1, "alpha_h": 0.1}}"#, "weights"),
            (r#"{"sim2real": {"grid": {"goal_distance": 3}}}"#, "goal_distance"),
            (r#"{"generator": {"n_per_modality": 0}}"#, "n_per_modality"),
            (r#"{"workers": 0}"#, "workers"),
        ] {
            let err = RunConfig::from_json(json).unwrap_err();
            assert!(err.to_string().contains(field), "{json}: {err}");
        }
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some(3)), 1);
        assert_eq!(resolve_seed(None, Some(2), Some(3)), 2);
        assert_eq!(resolve_seed(None, None, Some(3)), 3);
        assert_eq!(resolve_seed(None, None, None), DEFAULT_SEED);
    }

    #[test]
    fn default_subtasks_read_action_axes() {
        let subs = RunConfig::default().subtasks(8, 4, 4).unwrap();
        assert_eq!(subs.len(), 4);
        assert_eq!(subs[2].weights[6], 1.0);
        assert_eq!(subs[2].weights.iter().sum::<f64>(), 1.0);
        assert!(RunConfig::default().subtasks(6, 4, 4).is_err());
    }
}
