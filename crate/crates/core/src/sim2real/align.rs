//! Adversarial feature alignment at desk scale: a linear encoder, a
//! logistic discriminator and alternating full-batch gradient steps.
//!
//! The discriminator ascends the log-likelihood of labelling encoded
//! simulation samples 1 and real samples 0. The encoder descends that same
//! log-likelihood plus `lambda_task` times the tied-weight reconstruction
//! error `|W^T W x - x|^2`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentModel {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub encoder: Vec<f64>,
    pub disc_weights: Vec<f64>,
    pub disc_bias: f64,
    pub lambda_task: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Leading fraction of each sample set used for training.
    pub train_fraction: f64,
    pub freeze_encoder: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            steps: 500,
            learning_rate: 0.05,
            train_fraction: 0.7,
            freeze_encoder: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentOutcome {
    pub model: AlignmentModel,
    pub held_out_accuracy: f64,
    pub train_accuracy: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl AlignmentModel {
    /// Identity-initialised encoder and a zero discriminator.
    pub fn new(in_dim: usize, out_dim: usize, lambda_task: f64) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::config("alignment", "dimensions must be positive"));
        }
        if !(lambda_task.is_finite() && lambda_task >= 0.0) {
            return Err(Error::config("lambda_task", "must be non-negative"));
        }
        let mut encoder = vec![0.0; out_dim * in_dim];
        for i in 0..out_dim.min(in_dim) {
            encoder[i * in_dim + i] = 1.0;
        }
        Ok(AlignmentModel {
            in_dim,
            out_dim,
            encoder,
            disc_weights: vec![0.0; out_dim],
            disc_bias: 0.0,
            lambda_task,
        })
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        self.encoder
            .chunks(self.in_dim)
            .map(|row| row.iter().zip(x).map(|(w, x)| w * x).sum())
            .collect()
    }

    /// Probability that `x` came from the simulator.
    pub fn discriminate(&self, x: &[f64]) -> f64 {
        let z = self.encode(x);
        sigmoid(self.disc_bias + z.iter().zip(&self.disc_weights).map(|(z, w)| z * w).sum::<f64>())
    }

    pub fn accuracy(&self, sim: &[Vec<f64>], real: &[Vec<f64>]) -> f64 {
        let hits = sim.iter().filter(|x| self.discriminate(x) > 0.5).count()
            + real.iter().filter(|x| self.discriminate(x) <= 0.5).count();
        hits as f64 / (sim.len() + real.len()) as f64
    }

    fn discriminator_step(&mut self, data: &[(&[f64], f64)], lr: f64) {
        let mut gw = vec![0.0; self.out_dim];
        let mut gb = 0.0;
        for (x, y) in data {
            let z = self.encode(x);
            let err = y - self.discriminate(x);
            for (g, z) in gw.iter_mut().zip(&z) {
                *g += err * z;
            }
            gb += err;
        }
        let n = data.len() as f64;
        for (w, g) in self.disc_weights.iter_mut().zip(gw) {
            *w += lr * g / n;
        }
        self.disc_bias += lr * gb / n;
    }

    fn encoder_step(&mut self, data: &[(&[f64], f64)], lr: f64) {
        let (o, d) = (self.out_dim, self.in_dim);
        let mut grad = vec![0.0; o * d];
        for (x, y) in data {
            let z = self.encode(x);
            // log-likelihood term: (y - D) v x^T
            let err = y - self.discriminate(x);
            for i in 0..o {
                let c = err * self.disc_weights[i];
                for j in 0..d {
                    grad[i * d + j] += c * x[j];
                }
            }
            if self.lambda_task > 0.0 {
                // reconstruction: 2 (z e^T + (W e) x^T), e = W^T z - x
                let mut e = vec![0.0; d];
                for (row, zi) in self.encoder.chunks(d).zip(&z) {
                    for (ej, w) in e.iter_mut().zip(row) {
                        *ej += w * zi;
                    }
                }
                for (ej, xj) in e.iter_mut().zip(x.iter()) {
                    *ej -= xj;
                }
                let we = self.encode(&e);
                for i in 0..o {
                    for j in 0..d {
                        grad[i * d + j] +=
                            self.lambda_task * 2.0 * (z[i] * e[j] + we[i] * x[j]) / d as f64;
                    }
                }
            }
        }
        let n = data.len() as f64;
        for (w, g) in self.encoder.iter_mut().zip(grad) {
            *w -= lr * g / n;
        }
    }
}

fn check_samples(samples: &[Vec<f64>], dim: usize, what: &'static str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    samples.iter().try_for_each(|s| check_len(dim, s.len()))
}

pub fn align_features(
    sim: &[Vec<f64>],
    real: &[Vec<f64>],
    mut model: AlignmentModel,
    config: AlignConfig,
) -> Result<AlignmentOutcome> {
    check_samples(sim, model.in_dim, "no simulation samples")?;
    check_samples(real, model.in_dim, "no real samples")?;
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::config("train_fraction", "must lie in (0, 1)"));
    }
    let split = |s: &[Vec<f64>]| ((s.len() as f64 * config.train_fraction).round() as usize).clamp(1, s.len());
    let (sim_train, sim_test) = sim.split_at(split(sim));
    let (real_train, real_test) = real.split_at(split(real));
    let data: Vec<(&[f64], f64)> = sim_train
        .iter()
        .map(|x| (x.as_slice(), 1.0))
        .chain(real_train.iter().map(|x| (x.as_slice(), 0.0)))
        .collect();

    for _ in 0..config.steps {
        model.discriminator_step(&data, config.learning_rate);
        if !config.freeze_encoder {
            model.encoder_step(&data, config.learning_rate);
        }
    }
    let held_out_accuracy = if sim_test.is_empty() || real_test.is_empty() {
        model.accuracy(sim_train, real_train)
    } else {
        model.accuracy(sim_test, real_test)
    };
    let train_accuracy = model.accuracy(sim_train, real_train);
    Ok(AlignmentOutcome {
        model,
        held_out_accuracy,
        train_accuracy,
    })
}

/// `n` standard Gaussian samples in `dim` dimensions, shifted by `shift`
/// along the first axis.
pub fn gaussian_cloud(n: usize, dim: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed, "gaussian-cloud", &[]);
    (0..n)
        .map(|_| {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            v[0] += shift;
            v
        })
        .collect()
}
