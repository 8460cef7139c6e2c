//! Task decomposition, context-weighted decision utility and
//! feedback-adjusted selection.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subtask {
    pub id: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubtaskSpec {
    Leaf(Subtask),
    /// Expands to the subtasks of another template.
    Nested { template: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTemplate {
    pub id: String,
    pub subtasks: Vec<SubtaskSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskLibrary {
    pub templates: Vec<TaskTemplate>,
}

impl TaskLibrary {
    pub fn new(templates: Vec<TaskTemplate>) -> Result<Self> {
        let lib = TaskLibrary { templates };
        lib.validate()?;
        Ok(lib)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for t in &self.templates {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::config("tasks", format!("duplicate template `{}`", t.id)));
            }
            if t.subtasks.is_empty() {
                return Err(Error::config("tasks", format!("template `{}` has no subtasks", t.id)));
            }
            let mut ids = HashSet::new();
            for s in &t.subtasks {
                if let SubtaskSpec::Leaf(s) = s {
                    if !ids.insert(s.id.as_str()) {
                        return Err(Error::config(
                            "tasks",
                            format!("template `{}` repeats subtask `{}`", t.id, s.id),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn template(&self, id: &str) -> Result<&TaskTemplate> {
        self.templates
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::Lookup(format!("unknown task `{id}`")))
    }

    /// Depth-first expansion of `task` into its leaf subtasks, in template order.
    pub fn decompose(&self, task: &str) -> Result<Vec<Subtask>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.expand(task, &mut path, &mut out)?;
        Ok(out)
    }

    fn expand<'a>(&'a self, task: &'a str, path: &mut Vec<&'a str>, out: &mut Vec<Subtask>) -> Result<()> {
        if path.contains(&task) {
            return Err(Error::Cycle(task.to_string()));
        }
        let template = self.template(task)?;
        path.push(task);
        for s in &template.subtasks {
            match s {
                SubtaskSpec::Leaf(s) => out.push(s.clone()),
                SubtaskSpec::Nested { template } => self.expand(template, path, out)?,
            }
        }
        path.pop();
        Ok(())
    }
}

pub fn subtask_priority(h: &Subtask, context: &[f64]) -> Result<f64> {
    check_len(h.weights.len(), context.len())?;
    Ok(h.weights.iter().zip(context).map(|(w, c)| w * c).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionCandidate {
    pub id: usize,
    pub context: Vec<f64>,
    pub predicted_outcome: f64,
    pub historical_feedback: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextWeights {
    pub w: Vec<f64>,
    pub lambda: f64,
}

impl ContextWeights {
    pub fn new(w: Vec<f64>, lambda: f64) -> Result<Self> {
        let cw = ContextWeights { w, lambda };
        cw.validate()?;
        Ok(cw)
    }

    pub fn uniform(n: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n], lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config("decision.weights", "weights must be non-negative"));
        }
        if self.w.iter().all(|w| *w == 0.0) {
            return Err(Error::config("decision.weights", "weights must not all be zero"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config("decision.lambda", "must be non-negative"));
        }
        Ok(())
    }
}

pub fn decision_utility(d: &DecisionCandidate, w: &ContextWeights) -> Result<f64> {
    check_len(w.w.len(), d.context.len())?;
    Ok(w.w.iter().zip(&d.context).map(|(w, c)| w * c).sum())
}

fn argmax_by<F>(candidates: &[DecisionCandidate], mut score: F) -> Result<&DecisionCandidate>
where
    F: FnMut(&DecisionCandidate) -> Result<f64>,
{
    let mut best: Option<(&DecisionCandidate, f64)> = None;
    for c in candidates {
        let u = score(c)?;
        if best.is_none_or(|(_, b)| u > b) {
            best = Some((c, u));
        }
    }
    best.map(|(c, _)| c)
        .ok_or(Error::EmptyInput("no decision candidates"))
}

/// Highest weighted utility; ties go to the earliest candidate.
pub fn select_decision<'a>(candidates: &'a [DecisionCandidate], w: &ContextWeights) -> Result<&'a DecisionCandidate> {
    argmax_by(candidates, |c| decision_utility(c, w))
}

pub fn feedback_adjusted_utility(d: &DecisionCandidate, lambda: f64) -> f64 {
    d.predicted_outcome + lambda * d.historical_feedback
}

pub fn select_adjusted(candidates: &[DecisionCandidate], lambda: f64) -> Result<&DecisionCandidate> {
    argmax_by(candidates, |c| Ok(feedback_adjusted_utility(c, lambda)))
}

/// Outcome history per decision id. Append-only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeedbackHistory {
    outcomes: BTreeMap<usize, Vec<f64>>,
}

impl FeedbackHistory {
    pub fn push(&mut self, decision: usize, outcome: f64) {
        self.outcomes.entry(decision).or_default().push(outcome);
    }

    pub fn outcomes(&self, decision: usize) -> &[f64] {
        self.outcomes.get(&decision).map_or(&[], Vec::as_slice)
    }

    /// Running mean of past outcomes; zero for an unseen decision.
    pub fn mean(&self, decision: usize) -> f64 {
        let o = self.outcomes(decision);
        if o.is_empty() {
            0.0
        } else {
            o.iter().sum::<f64>() / o.len() as f64
        }
    }

    /// Mean over every recorded outcome; zero before any feedback.
    pub fn pooled_mean(&self) -> f64 {
        let (sum, n) = self
            .outcomes
            .values()
            .fold((0.0, 0usize), |(s, n), o| (s + o.iter().sum::<f64>(), n + o.len()));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Running mean for a seen decision, the pooled mean otherwise, so a
    /// decision is not penalized merely for not having been tried yet.
    pub fn mean_or_pooled(&self, decision: usize) -> f64 {
        if self.outcomes(decision).is_empty() {
            self.pooled_mean()
        } else {
            self.mean(decision)
        }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}
