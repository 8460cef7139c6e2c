//! Seeded synthetic multimodal corpus.
//!
//! Every record carries four ground-truth flags: `valid`, `relevant`,
//! `action` and `mem_label`. The clean value of each flag is encoded in the
//! record so that a nearest-cluster oracle recovers it exactly:
//!
//! * `valid` puts the trust score in the upper (`trust_mean ± trust_spread`)
//!   or mirrored lower band.
//! * `relevant` shifts every feature by `∓separation / 2`; per-coordinate
//!   noise is a standard Gaussian truncated to `|z| < separation / 2`, so the
//!   two clusters never overlap.
//! * `mem_label` lowers coordinate `mem_label` by `mem_shift`.
//! * `action` lowers coordinate `n_mem_classes + action` by `action_shift`.
//!
//! After encoding, every flag is flipped independently with the modality's
//! `label_noise` probability. Integer labels flip into a uniformly chosen
//! label of the other half of their range, matching the binary judgment the
//! evaluator applies to them (see [`label_is_positive`]).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::modality::{Modality, PerModality};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalRecord {
    pub id: u64,
    pub modality: Modality,
    pub features: Vec<f64>,
    pub trust: f64,
    #[serde(rename = "valid")]
    pub valid_flag: bool,
    #[serde(rename = "relevant")]
    pub relevance_flag: bool,
    #[serde(rename = "action")]
    pub action_label: usize,
    #[serde(rename = "mem_label")]
    pub memory_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_per_modality: usize,
    pub feature_dim: usize,
    pub n_actions: usize,
    pub n_mem_classes: usize,
    pub label_noise: PerModality<f64>,
    pub trust_mean: f64,
    pub trust_spread: f64,
    pub separation: f64,
    pub mem_shift: f64,
    pub action_shift: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_per_modality: 10_000,
            feature_dim: 8,
            n_actions: 4,
            n_mem_classes: 4,
            label_noise: PerModality {
                visual: 0.09,
                auditory: 0.11,
                tactile: 0.12,
            },
            trust_mean: 0.75,
            trust_spread: 0.2,
            separation: 2.0,
            mem_shift: 6.0,
            action_shift: 3.0,
            seed: 42,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_modality == 0 {
            return Err(Error::config("n_per_modality", "must be at least 1"));
        }
        if self.n_actions < 2 || !self.n_actions.is_multiple_of(2) {
            return Err(Error::config("n_actions", "must be an even count of at least 2"));
        }
        if self.n_mem_classes < 2 || !self.n_mem_classes.is_multiple_of(2) {
            return Err(Error::config(
                "n_mem_classes",
                "must be an even count of at least 2",
            ));
        }
        if self.feature_dim < self.n_actions + self.n_mem_classes {
            return Err(Error::config(
                "feature_dim",
                format!(
                    "must be at least n_mem_classes + n_actions = {}",
                    self.n_actions + self.n_mem_classes
                ),
            ));
        }
        for m in Modality::ALL {
            let p = *self.label_noise.get(m);
            if !(0.0..0.5).contains(&p) {
                return Err(Error::config(
                    format!("label_noise.{m}"),
                    format!("{p} is outside [0, 0.5)"),
                ));
            }
        }
        let lo = self.trust_mean - self.trust_spread;
        let hi = self.trust_mean + self.trust_spread;
        if !(self.trust_spread >= 0.0 && lo >= 0.0 && hi <= 1.0) {
            return Err(Error::config(
                "trust_spread",
                "trust_mean ± trust_spread must stay within [0, 1]",
            ));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::config("separation", "must be positive and finite"));
        }
        for (field, v) in [("mem_shift", self.mem_shift), ("action_shift", self.action_shift)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, "must be non-negative and finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub counts: PerModality<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub records: Vec<ModalRecord>,
}

impl Dataset {
    pub fn records_for(&self, modality: Modality) -> impl Iterator<Item = &ModalRecord> {
        self.records.iter().filter(move |r| r.modality == modality)
    }

    /// Re-checks every invariant of the corpus.
    pub fn validate(&self) -> Result<()> {
        if self.meta.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.meta.schema_version
            )));
        }
        let g = &self.meta.generator;
        g.validate()?;
        let mut counts = PerModality::from_fn(|_| 0usize);
        let mut prev: Option<u64> = None;
        for (index, r) in self.records.iter().enumerate() {
            let bad = |message: String| Error::Record { index, message };
            match prev {
                None if r.id != 0 => return Err(bad(format!("first id must be 0, found {}", r.id))),
                Some(p) if r.id == p => return Err(bad(format!("duplicate id {}", r.id))),
                Some(p) if r.id < p => {
                    return Err(bad(format!("id {} is not increasing (previous {p})", r.id)))
                }
                _ => {}
            }
            prev = Some(r.id);
            if r.features.len() != g.feature_dim {
                return Err(bad(format!(
                    "field `features` has {} entries, expected {}",
                    r.features.len(),
                    g.feature_dim
                )));
            }
            if let Some(k) = r.features.iter().position(|v| !v.is_finite()) {
                return Err(bad(format!("field `features[{k}]` is not finite")));
            }
            if !(0.0..=1.0).contains(&r.trust) {
                return Err(bad(format!("field `trust` = {} is outside [0, 1]", r.trust)));
            }
            if r.action_label >= g.n_actions {
                return Err(bad(format!(
                    "field `action` = {} is not below {}",
                    r.action_label, g.n_actions
                )));
            }
            if r.memory_label >= g.n_mem_classes {
                return Err(bad(format!(
                    "field `mem_label` = {} is not below {}",
                    r.memory_label, g.n_mem_classes
                )));
            }
            *counts.get_mut(r.modality) += 1;
        }
        if counts != self.meta.counts {
            return Err(Error::Parse(format!(
                "record counts {counts:?} disagree with meta counts {:?}",
                self.meta.counts
            )));
        }
        Ok(())
    }
}

/// Binary view of an integer label: the upper half of `0..n` is positive.
pub fn label_is_positive(label: usize, n: usize) -> bool {
    label >= n / 2
}

fn truncated_normal<R: Rng>(rng: &mut R, bound: f64) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() < bound {
            return z;
        }
    }
}

fn flip_label<R: Rng>(rng: &mut R, label: usize, n: usize) -> usize {
    let half = n / 2;
    let offset = rng.random_range(0..half);
    if label_is_positive(label, n) {
        offset
    } else {
        half + offset
    }
}

fn generate_record(cfg: &GeneratorConfig, modality: Modality, i: usize) -> ModalRecord {
    let mut rng = seed::rng(cfg.seed, "dataset", &[modality.index() as u64, i as u64]);
    let valid = rng.random_bool(0.5);
    let relevant = rng.random_bool(0.5);
    let action = rng.random_range(0..cfg.n_actions);
    let mem = rng.random_range(0..cfg.n_mem_classes);

    let u: f64 = rng.random();
    let band = cfg.trust_mean + cfg.trust_spread * (2.0 * u - 1.0);
    let trust = if valid { band } else { 1.0 - band };

    let half = cfg.separation / 2.0;
    let center = if relevant { -half } else { half };
    let mut features: Vec<f64> = (0..cfg.feature_dim)
        .map(|_| center + truncated_normal(&mut rng, half))
        .collect();
    features[mem] -= cfg.mem_shift;
    features[cfg.n_mem_classes + action] -= cfg.action_shift;

    let p = *cfg.label_noise.get(modality);
    let valid_flag = valid ^ rng.random_bool(p);
    let relevance_flag = relevant ^ rng.random_bool(p);
    let action_label = if rng.random_bool(p) {
        flip_label(&mut rng, action, cfg.n_actions)
    } else {
        action
    };
    let memory_label = if rng.random_bool(p) {
        flip_label(&mut rng, mem, cfg.n_mem_classes)
    } else {
        mem
    };

    ModalRecord {
        id: (modality.index() * cfg.n_per_modality + i) as u64,
        modality,
        features,
        trust,
        valid_flag,
        relevance_flag,
        action_label,
        memory_label,
    }
}

pub fn generate(cfg: &GeneratorConfig, exec: Execution) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.n_per_modality;
    let records = exec.map_range(3 * n, |j| generate_record(cfg, Modality::ALL[j / n], j % n));
    Ok(Dataset {
        meta: DatasetMeta {
            schema_version: SCHEMA_VERSION,
            seed: cfg.seed,
            generator: cfg.clone(),
            counts: PerModality::from_fn(|_| n),
        },
        records,
    })
}

pub fn to_json(dataset: &Dataset) -> Result<String> {
    Ok(serde_json::to_string(dataset)?)
}

pub fn save(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, dataset)?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct RawDataset {
    meta: serde_json::Value,
    records: Vec<serde_json::Value>,
}

pub fn from_json_reader<R: std::io::Read>(reader: R) -> Result<Dataset> {
    let raw: RawDataset = serde_json::from_reader(reader)
        .map_err(|e| Error::Parse(format!("dataset document: {e}")))?;
    if let Some(v) = raw.meta.get("schema_version").and_then(|v| v.as_u64()) {
        if v != u64::from(SCHEMA_VERSION) {
            return Err(Error::Parse(format!(
                "schema_version {v} is not supported (expected {SCHEMA_VERSION})"
            )));
        }
    } else {
        return Err(Error::Parse("meta.schema_version is missing".into()));
    }
    let meta: DatasetMeta =
        serde_json::from_value(raw.meta).map_err(|e| Error::Parse(format!("meta: {e}")))?;
    let records = raw
        .records
        .into_iter()
        .enumerate()
        .map(|(index, v)| {
            serde_json::from_value(v).map_err(|e| Error::Record {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<ModalRecord>>>()?;
    let dataset = Dataset { meta, records };
    dataset.validate()?;
    Ok(dataset)
}

pub fn load(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    from_json_reader(BufReader::new(file))
}

/// Per-modality record counts, for progress output.
pub fn counts(dataset: &Dataset) -> BTreeMap<Modality, usize> {
    let mut out = BTreeMap::new();
    for r in &dataset.records {
        *out.entry(r.modality).or_insert(0) += 1;
    }
    out
}
