//! Short-term and long-term memory with cosine retrieval and a
//! softmax-weighted attention readout.
//!
//! The short-term store is a bounded FIFO. An entry evicted from it is
//! promoted to the long-term store with its original timestamp.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::attention::softmax;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Stm,
    Ltm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub vector: Vec<f64>,
    pub label: usize,
    pub timestamp: u64,
    pub tier: Tier,
    #[serde(skip)]
    norm: f64,
}

impl MemoryEntry {
    fn new(vector: Vec<f64>, label: usize, timestamp: u64, tier: Tier) -> Result<Self> {
        let norm = l2(&vector);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidEntry("memory vectors must be nonzero and finite"));
        }
        Ok(MemoryEntry {
            vector,
            label,
            timestamp,
            tier,
            norm,
        })
    }
}

/// Which stores a readout spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tiers {
    pub stm: bool,
    pub ltm: bool,
}

impl Tiers {
    pub const STM: Tiers = Tiers { stm: true, ltm: false };
    pub const LTM: Tiers = Tiers { stm: false, ltm: true };
    pub const BOTH: Tiers = Tiers { stm: true, ltm: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryConfig {
    pub stm_capacity: usize,
    /// Entries kept by the readout once the queried tiers exceed the threshold.
    pub sparse_readout_top_n: usize,
    pub sparse_readout_threshold: usize,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig {
            stm_capacity: 32,
            sparse_readout_top_n: 8,
            sparse_readout_threshold: 64,
        }
    }
}

impl MemoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stm_capacity == 0 {
            return Err(Error::config("memory.stm_capacity", "must be at least 1"));
        }
        if self.sparse_readout_top_n == 0 {
            return Err(Error::config("memory.sparse_readout_top_n", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub vector: Vec<f64>,
    /// `(timestamp, weight)` of every entry that received weight.
    pub weights: Vec<(u64, f64)>,
}

#[derive(Debug, Clone)]
pub struct MemoryStore {
    config: MemoryConfig,
    stm: VecDeque<MemoryEntry>,
    ltm: Vec<MemoryEntry>,
    clock: u64,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

pub fn cosine_score(query: &[f64], entry: &[f64]) -> Result<f64> {
    check_len(query.len(), entry.len())?;
    let (nq, ne) = (l2(query), l2(entry));
    if nq == 0.0 || ne == 0.0 {
        return Err(Error::InvalidEntry("cosine of a zero vector"));
    }
    Ok((dot(query, entry) / (nq * ne)).clamp(-1.0, 1.0))
}

impl MemoryStore {
    pub fn new(config: MemoryConfig) -> Result<Self> {
        config.validate()?;
        Ok(MemoryStore {
            config,
            stm: VecDeque::with_capacity(config.stm_capacity + 1),
            ltm: Vec::new(),
            clock: 0,
        })
    }

    pub fn config(&self) -> MemoryConfig {
        self.config
    }

    pub fn stm(&self) -> impl ExactSizeIterator<Item = &MemoryEntry> {
        self.stm.iter()
    }

    pub fn ltm(&self) -> &[MemoryEntry] {
        &self.ltm
    }

    pub fn len(&self) -> usize {
        self.stm.len() + self.ltm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn tick(&mut self) -> u64 {
        let t = self.clock;
        self.clock += 1;
        t
    }

    /// Inserts a prior entry straight into long-term memory.
    pub fn seed_ltm(&mut self, vector: Vec<f64>, label: usize) -> Result<()> {
        let entry = MemoryEntry::new(vector, label, self.clock, Tier::Ltm)?;
        self.tick();
        self.ltm.push(entry);
        Ok(())
    }

    pub fn stm_append(&mut self, delta: Vec<f64>, label: usize) -> Result<()> {
        let entry = MemoryEntry::new(delta, label, self.clock, Tier::Stm)?;
        self.tick();
        self.stm.push_back(entry);
        while self.stm.len() > self.config.stm_capacity {
            if let Some(old) = self.stm.pop_front() {
                self.promote_to_ltm(old);
            }
        }
        Ok(())
    }

    pub fn promote_to_ltm(&mut self, mut entry: MemoryEntry) {
        entry.tier = Tier::Ltm;
        self.ltm.push(entry);
    }

    fn score(query: &[f64], qnorm: f64, entry: &MemoryEntry) -> f64 {
        (dot(query, &entry.vector) / (qnorm * entry.norm)).clamp(-1.0, 1.0)
    }

    fn query_norm(&self, query: &[f64]) -> Result<f64> {
        let qnorm = l2(query);
        if qnorm == 0.0 || !qnorm.is_finite() {
            return Err(Error::InvalidEntry("query must be nonzero and finite"));
        }
        if let Some(e) = self.stm.iter().chain(&self.ltm).next() {
            check_len(e.vector.len(), query.len())?;
        }
        Ok(qnorm)
    }

    /// Most similar long-term entry; ties go to the earliest timestamp.
    pub fn ltm_retrieve(&self, query: &[f64]) -> Result<(&MemoryEntry, f64)> {
        if self.ltm.is_empty() {
            return Err(Error::EmptyMemory("long-term memory has no entries"));
        }
        let qnorm = self.query_norm(query)?;
        let mut best: Option<(&MemoryEntry, f64)> = None;
        for e in &self.ltm {
            let s = Self::score(query, qnorm, e);
            best = match best {
                Some((b, bs)) if bs > s || (bs == s && b.timestamp <= e.timestamp) => Some((b, bs)),
                _ => Some((e, s)),
            };
        }
        Ok(best.expect("ltm is nonempty"))
    }

    pub fn attention_readout(&self, query: &[f64], tiers: Tiers) -> Result<Readout> {
        let qnorm = self.query_norm(query)?;
        let stm = self.stm.iter().filter(|_| tiers.stm);
        let ltm = self.ltm.iter().filter(|_| tiers.ltm);
        let mut scored: Vec<(&MemoryEntry, f64)> = stm
            .chain(ltm)
            .map(|e| (e, Self::score(query, qnorm, e)))
            .collect();
        if scored.is_empty() {
            return Err(Error::EmptyMemory("no entries in the queried tiers"));
        }
        if scored.len() > self.config.sparse_readout_threshold {
            let order = |(a, sa): &(&MemoryEntry, f64), (b, sb): &(&MemoryEntry, f64)| {
                sb.total_cmp(sa).then_with(|| a.timestamp.cmp(&b.timestamp))
            };
            let n = self.config.sparse_readout_top_n.min(scored.len());
            if n < scored.len() {
                scored.select_nth_unstable_by(n - 1, order);
                scored.truncate(n);
            }
            scored.sort_by(order);
        }
        let scores: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
        let weights = softmax(&scores)?;
        let mut vector = vec![0.0; query.len()];
        for ((e, _), w) in scored.iter().zip(&weights) {
            for (o, v) in vector.iter_mut().zip(&e.vector) {
                *o += w * v;
            }
        }
        Ok(Readout {
            vector,
            weights: scored
                .iter()
                .zip(weights)
                .map(|((e, _), w)| (e.timestamp, w))
                .collect(),
        })
    }
}
