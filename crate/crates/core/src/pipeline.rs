//! The seven-step run over one dataset: per-record scoring, the memory and
//! decision loop, sim2real re-planning, trace emission and reports.
//!
//! Work splits in two stages per modality. Stage A (ingest, scenarios,
//! attention) is a pure function of the record and runs data-parallel.
//! Stage B (memory, decision, sim2real, feedback) carries state from one
//! record to the next and runs in record order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::attention::{refine_scenario, relevance_scores, top_k_by_relevance, RefinedScenario};
use crate::config::RunConfig;
use crate::dataset::{label_is_positive, Dataset, ModalRecord};
use crate::decision::{
    decision_utility, select_adjusted, subtask_priority, ContextWeights, DecisionCandidate, FeedbackHistory, Subtask,
};
use crate::error::{Error, Result};
use crate::eval::{to_markdown, ModalityReport, StepConfusion, STEPS};
use crate::exec::Execution;
use crate::executor::{route_feedback, select_optimal_action, ActionCommand, Episode, FeedbackRecord};
use crate::ingest::{extract_features, filter_by_trust, fit_norm_stats, fuse, normalize, TrustThreshold};
use crate::memory::{cosine_score, MemoryStore, Tiers};
use crate::modality::Modality;
use crate::scenario::{
    feature_map, generate_scenarios, integrate, scenario_utility, select_top_k, semantic_features, Scenario,
};
use crate::seed;
use crate::sim2real::{optimize_policy, randomize_env, refine_policy, reward_discrepancy, Action, Reward};

pub const TRACE_FILE: &str = "trace.jsonl";
pub const MARKDOWN_FILE: &str = "report.md";

pub fn csv_file(m: Modality) -> String {
    format!("report_{m}.csv")
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Modalities to run, in canonical order.
    pub modalities: Vec<Modality>,
    pub exec: Execution,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        RunOptions { seed, modalities: Modality::ALL.to_vec(), exec: Execution::default() }
    }
}

#[derive(Serialize)]
struct ActionLine<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    modality: Modality,
    #[serde(flatten)]
    command: &'a ActionCommand,
    sim_action: usize,
    semantic_features: &'a [f64],
}

#[derive(Serialize)]
struct FeedbackLine<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    modality: Modality,
    #[serde(flatten)]
    feedback: &'a FeedbackRecord,
}

#[derive(Debug, Clone)]
pub struct ModalityRun {
    pub modality: Modality,
    pub confusions: Vec<StepConfusion>,
    pub commands: Vec<ActionCommand>,
    /// JSON lines, one action and one feedback line per surviving record.
    pub trace: String,
}

impl ModalityRun {
    pub fn report(&self) -> Result<ModalityReport> {
        ModalityReport::from_confusions(self.modality, &self.confusions)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub runs: Vec<ModalityRun>,
}

impl RunOutput {
    pub fn reports(&self) -> Result<Vec<ModalityReport>> {
        self.runs.iter().map(ModalityRun::report).collect()
    }

    pub fn trace(&self) -> String {
        self.runs.iter().map(|r| r.trace.as_str()).collect()
    }

    /// Writes the trace, one CSV per modality and the combined Markdown
    /// report. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let reports = self.reports()?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![(dir.join(TRACE_FILE), self.trace())];
        for r in &reports {
            files.push((dir.join(csv_file(r.modality)), r.to_csv()));
        }
        files.push((dir.join(MARKDOWN_FILE), to_markdown(&reports, None)));
        for (path, text) in &files {
            std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

/// Everything stage A yields for one surviving record.
struct Prepared {
    semantic: Vec<f64>,
    in_top_k: bool,
    relevant: bool,
    /// Own scenarios chosen by sparse attention, best relevance first.
    selected: Vec<Scenario>,
    own_relevance: Vec<f64>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    master: u64,
    modality: Modality,
    n_mem: usize,
    n_actions: usize,
    subtasks: Vec<Subtask>,
    weights: ContextWeights,
    internal: Vec<f64>,
    instruction: Vec<f64>,
}

fn channel(values: &[f64], dim: usize, field: &str) -> Result<Vec<f64>> {
    match values.len() {
        0 => Ok(vec![0.0; dim]),
        n if n == dim => Ok(values.to_vec()),
        n => Err(Error::config(field, format!("has {n} values, features have {dim}"))),
    }
}

pub fn run(cfg: &RunConfig, dataset: &Dataset, opts: &RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    dataset.validate()?;
    let g = &dataset.meta.generator;
    if g.n_actions > Action::ALL.len() {
        return Err(Error::config(
            "generator.n_actions",
            format!("the gridworld has {} actions, dataset uses {}", Action::ALL.len(), g.n_actions),
        ));
    }
    let dim = cfg.extraction.output_len(g.feature_dim)?;
    let subtasks = cfg.subtasks(dim, g.n_mem_classes, g.n_actions)?;
    let weights = ContextWeights::new(cfg.decision.weights.clone(), cfg.decision.lambda)?;
    let base = Context {
        cfg,
        master: opts.seed,
        modality: Modality::Visual,
        n_mem: g.n_mem_classes,
        n_actions: g.n_actions,
        subtasks,
        weights,
        internal: channel(&cfg.internal_state, dim, "internal_state")?,
        instruction: channel(&cfg.instruction, dim, "instruction")?,
    };
    let mut modalities = opts.modalities.clone();
    modalities.sort();
    modalities.dedup();
    let exec = opts.exec;
    let runs = exec.install(cfg.workers, || {
        exec.map(&modalities, |&m| {
            let ctx = Context { modality: m, subtasks: base.subtasks.clone(), weights: base.weights.clone(), internal: base.internal.clone(), instruction: base.instruction.clone(), ..base };
            run_modality(&ctx, dataset, exec)
        })
    });
    Ok(RunOutput { runs: runs.into_iter().collect::<Result<_>>()? })
}

fn run_modality(ctx: &Context<'_>, dataset: &Dataset, exec: Execution) -> Result<ModalityRun> {
    let cfg = ctx.cfg;
    let m = ctx.modality;
    let mut confusions: Vec<StepConfusion> = (1..=STEPS).map(StepConfusion::new).collect();

    let records: Vec<&ModalRecord> = dataset.records_for(m).collect();
    if records.is_empty() {
        return Err(Error::InvalidInput(format!("dataset has no {m} records")));
    }
    let tau = TrustThreshold::new(cfg.tau)?;
    for r in &records {
        confusions[0].record_outcome(r.trust > tau.value(), r.valid_flag);
    }
    let survivors = filter_by_trust(records.iter().copied(), tau);
    if survivors.is_empty() {
        return Err(Error::InvalidInput(format!("no {m} record survived the trust threshold")));
    }

    let pooled: Vec<f64> = survivors.iter().flat_map(|r| r.features.iter().copied()).collect();
    let stats = fit_norm_stats(&pooled)?;
    let mapped = exec.map(&survivors, |r| -> Result<(Vec<f64>, Vec<f64>)> {
        let norm = normalize(&r.features, stats)?;
        let bundle = fuse(vec![(m, extract_features(&norm, cfg.extraction)?)])?;
        let s = bundle.get(m).expect("bundle holds its own modality");
        let u = integrate(s, &ctx.internal, &ctx.instruction, cfg.weights)?;
        Ok((semantic_features(&u), feature_map(&u)))
    });
    let mapped: Vec<(Vec<f64>, Vec<f64>)> = mapped.into_iter().collect::<Result<_>>()?;

    // Reference scenarios come from the modality's mean feature map and
    // compete with every record's own scenarios.
    let dim = mapped[0].1.len();
    let mut mean_map = vec![0.0; dim];
    for (_, fm) in &mapped {
        for (a, v) in mean_map.iter_mut().zip(fm) {
            *a += v;
        }
    }
    for a in &mut mean_map {
        *a /= mapped.len() as f64;
    }
    let own_count = cfg.m_count;
    let reference: Vec<Scenario> = generate_scenarios(
        &mean_map,
        own_count,
        cfg.noise_width,
        seed::derive(ctx.master, "reference", &[m.index() as u64]),
    )
    .into_iter()
    .map(|s| Scenario { index: s.index + own_count, ..s })
    .collect();

    let indices: Vec<usize> = (0..survivors.len()).collect();
    let prepared = exec.map(&indices, |&i| -> Result<Prepared> {
        let (semantic, fm) = &mapped[i];
        let own = generate_scenarios(
            fm,
            own_count,
            cfg.noise_width,
            seed::derive(ctx.master, "scenario", &[m.index() as u64, survivors[i].id]),
        );
        let pool: Vec<Scenario> = own.iter().chain(&reference).cloned().collect();
        let top = select_top_k(&pool, cfg.k)?;
        let own_in_top = top.iter().filter(|s| s.index < own_count).count();
        let pool_dist = relevance_scores(&pool.iter().map(|s| s.utility).collect::<Vec<_>>())?;
        let own_mass: f64 = pool_dist.as_slice()[..own_count].iter().sum();
        let own_dist = relevance_scores(&own.iter().map(|s| s.utility).collect::<Vec<_>>())?;
        let selected = top_k_by_relevance(&own_dist, &own, cfg.k.min(own_count))?;
        Ok(Prepared {
            semantic: semantic.clone(),
            in_top_k: 2 * own_in_top >= cfg.k,
            relevant: own_mass > cfg.relevance_threshold,
            selected,
            own_relevance: own_dist.as_slice().to_vec(),
        })
    });

    let mut memory = MemoryStore::new(cfg.memory)?;
    for c in 0..ctx.n_mem {
        let mut e = vec![0.0; dim];
        e[c] = 1.0;
        memory.seed_ltm(e, c)?;
    }
    let mut history = FeedbackHistory::default();
    let mut commands = Vec::with_capacity(survivors.len());
    let mut trace = String::new();
    for (r, p) in survivors.iter().zip(prepared) {
        let p = p.map_err(|e| Error::Record { index: r.id as usize, message: e.to_string() })?;
        let step = Step::run(ctx, r, &p, &mut memory, &mut history)?;
        let outcomes = [
            (p.in_top_k, r.relevance_flag),
            (p.relevant, r.relevance_flag),
            (label_is_positive(step.retrieved, ctx.n_mem), label_is_positive(r.memory_label, ctx.n_mem)),
            (label_is_positive(step.decision, ctx.n_actions), label_is_positive(r.action_label, ctx.n_actions)),
            (label_is_positive(step.refined_action, ctx.n_actions), label_is_positive(r.action_label, ctx.n_actions)),
            (label_is_positive(step.command.action, ctx.n_actions), label_is_positive(r.action_label, ctx.n_actions)),
        ];
        for (c, (pred, actual)) in confusions[1..].iter_mut().zip(outcomes) {
            c.record_outcome(pred, actual);
        }
        let action = ActionLine {
            kind: "action",
            modality: m,
            command: &step.command,
            sim_action: step.sim_action,
            semantic_features: &p.semantic,
        };
        let feedback = FeedbackLine { kind: "feedback", modality: m, feedback: &step.feedback };
        let _ = writeln!(trace, "{}", serde_json::to_string(&action)?);
        let _ = writeln!(trace, "{}", serde_json::to_string(&feedback)?);
        commands.push(step.command);
    }
    Ok(ModalityRun { modality: m, confusions, commands, trace })
}

/// Stage B for one record.
struct Step {
    retrieved: usize,
    decision: usize,
    sim_action: usize,
    refined_action: usize,
    command: ActionCommand,
    feedback: FeedbackRecord,
}

impl Step {
    fn run(
        ctx: &Context<'_>,
        r: &ModalRecord,
        p: &Prepared,
        memory: &mut MemoryStore,
        history: &mut FeedbackHistory,
    ) -> Result<Step> {
        let cfg = ctx.cfg;
        // Memory-refined attention: the best refined scenario is the context.
        let mut best: Option<(RefinedScenario, Vec<f64>, f64)> = None;
        for s in &p.selected {
            let readout = memory.attention_readout(&s.attributes, Tiers::BOTH)?;
            let attributes = refine_scenario(&s.attributes, &readout.vector, cfg.beta)?;
            let u = scenario_utility(&attributes);
            if best.as_ref().is_none_or(|(_, _, bu)| u > *bu) {
                let refined = RefinedScenario { base: s.clone(), attributes, beta: cfg.beta };
                best = Some((refined, readout.vector, u));
            }
        }
        let (best, readout, _) = best.ok_or(Error::EmptyInput("no scenario selected"))?;
        let (entry, _) = memory.ltm_retrieve(&best.attributes)?;
        let retrieved = entry.label;

        let agreement = cosine_score(&readout, &best.base.attributes)?;
        let candidates = ctx
            .subtasks
            .iter()
            .enumerate()
            .map(|(id, h)| -> Result<DecisionCandidate> {
                let mut d = DecisionCandidate {
                    id,
                    context: vec![best.base.utility, agreement, subtask_priority(h, &best.attributes)?],
                    predicted_outcome: 0.0,
                    historical_feedback: history.mean_or_pooled(id),
                };
                d.predicted_outcome = decision_utility(&d, &ctx.weights)?;
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        let decision = select_adjusted(&candidates, ctx.weights.lambda)?.clone();

        let s2r = &cfg.sim2real;
        let direction = Action::from_index(decision.id).expect("decision ids are action indices");
        let base = s2r.grid.env_for(direction)?;
        let m_idx = ctx.modality.index() as u64;
        let spec = s2r.randomization.with_seed(seed::derive(ctx.master, "randomize", &[m_idx, r.id]));
        let sim = randomize_env(&base, &spec)?;
        let real = s2r.real_env(&base)?;
        let sim_policy = optimize_policy(&sim, s2r.gamma)?;
        let delta = reward_discrepancy(&Reward::Table(real.reward_table()), &Reward::Table(sim.reward_table()))?;
        let refined = refine_policy(&real, &delta, s2r.alpha, s2r.gamma)?;
        let start = real.state(real.start);

        let confidence = p.own_relevance[best.base.index];
        let command = select_optimal_action(r.id, &decision, &refined, real.start, confidence)?;
        let matched = command.action == r.action_label;
        let feedback = FeedbackRecord {
            record: r.id,
            decision: decision.id,
            outcome: if matched { 1.0 } else { 0.0 },
            matched,
        };
        route_feedback(
            &feedback,
            Episode { scenario: best.attributes.clone(), label: retrieved },
            history,
            memory,
        )?;
        Ok(Step {
            retrieved,
            decision: decision.id,
            sim_action: sim_policy.first_action(start).index(),
            refined_action: refined.first_action(start).index(),
            command,
            feedback,
        })
    }
}
