//! Turns the re-planned policy into an action command and feeds the
//! outcome back into decision history and short-term memory.

use serde::{Deserialize, Serialize};

use crate::decision::{DecisionCandidate, FeedbackHistory};
use crate::error::{Error, Result};
use crate::memory::MemoryStore;
use crate::sim2real::{Cell, PolicyTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    pub record: u64,
    pub action: usize,
    pub decision: usize,
    pub state: Cell,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub record: u64,
    pub decision: usize,
    pub outcome: f64,
    pub matched: bool,
}

/// What an episode leaves behind in short-term memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub scenario: Vec<f64>,
    pub label: usize,
}

pub fn select_optimal_action(
    record: u64,
    decision: &DecisionCandidate,
    policy: &PolicyTable,
    state: Cell,
    confidence: f64,
) -> Result<ActionCommand> {
    let height = policy.n_states() / policy.width;
    if state.0 >= policy.width || state.1 >= height {
        return Err(Error::Lookup(format!(
            "state {state:?} is outside the {}x{height} policy grid",
            policy.width
        )));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::InvalidInput(format!("confidence {confidence} is outside [0, 1]")));
    }
    let s = state.1 * policy.width + state.0;
    Ok(ActionCommand {
        record,
        action: policy.first_action(s).index(),
        decision: decision.id,
        state,
        confidence,
    })
}

pub fn route_feedback(
    fb: &FeedbackRecord,
    episode: Episode,
    history: &mut FeedbackHistory,
    memory: &mut MemoryStore,
) -> Result<()> {
    history.push(fb.decision, fb.outcome);
    memory.stm_append(episode.scenario, episode.label)
}
