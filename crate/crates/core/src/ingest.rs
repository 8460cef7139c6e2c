//! Trust filtering, per-modality z-normalization, feature extraction and
//! fusion of the surviving modalities.

use serde::{Deserialize, Serialize};

use crate::dataset::ModalRecord;
use crate::error::{Error, Result};
use crate::modality::Modality;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustThreshold(f64);

impl TrustThreshold {
    pub fn new(tau: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&tau) {
            Ok(TrustThreshold(tau))
        } else {
            Err(Error::config("tau", format!("{tau} is outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Keeps records whose trust is strictly above the threshold, in order.
pub fn filter_by_trust<'a, I>(records: I, threshold: TrustThreshold) -> Vec<&'a ModalRecord>
where
    I: IntoIterator<Item = &'a ModalRecord>,
{
    records
        .into_iter()
        .filter(|r| r.trust > threshold.0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

/// Population mean and standard deviation.
pub fn fit_norm_stats(values: &[f64]) -> Result<NormStats> {
    if values.len() < 2 {
        return Err(Error::EmptyInput("normalization needs at least two values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_finite() {
        return Err(Error::DegenerateModality);
    }
    Ok(NormStats { mean, std })
}

pub fn normalize(values: &[f64], stats: NormStats) -> Result<Vec<f64>> {
    if stats.std == 0.0 || !stats.std.is_finite() {
        return Err(Error::DegenerateModality);
    }
    Ok(values.iter().map(|v| (v - stats.mean) / stats.std).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExtractionMode {
    #[default]
    Identity,
    /// Mean, std, min, max and energy of every window of `window` values.
    Summary { window: usize },
}

impl ExtractionMode {
    pub fn output_len(self, input_len: usize) -> Result<usize> {
        match self {
            ExtractionMode::Identity => Ok(input_len),
            ExtractionMode::Summary { window } => {
                if window == 0 || window > input_len {
                    Err(Error::config(
                        "extraction.window",
                        format!("window {window} does not fit input of length {input_len}"),
                    ))
                } else {
                    Ok(5 * (input_len - window + 1))
                }
            }
        }
    }
}

pub fn extract_features(norm: &[f64], mode: ExtractionMode) -> Result<Vec<f64>> {
    match mode {
        ExtractionMode::Identity => Ok(norm.to_vec()),
        ExtractionMode::Summary { window } => {
            mode.output_len(norm.len())?;
            let mut out = Vec::with_capacity(5 * (norm.len() - window + 1));
            for w in norm.windows(window) {
                let n = w.len() as f64;
                let mean = w.iter().sum::<f64>() / n;
                let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                let min = w.iter().copied().fold(f64::INFINITY, f64::min);
                let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let energy = w.iter().map(|v| v * v).sum::<f64>() / n;
                out.extend([mean, std, min, max, energy]);
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    entries: Vec<(Modality, Vec<f64>)>,
}

impl FeatureBundle {
    pub fn entries(&self) -> &[(Modality, Vec<f64>)] {
        &self.entries
    }

    pub fn get(&self, m: Modality) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|(tag, _)| *tag == m)
            .map(|(_, v)| v.as_slice())
    }

    /// All entries concatenated in canonical modality order.
    pub fn flatten(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|(_, v)| v.iter().copied()).collect()
    }

    pub fn into_entries(self) -> Vec<(Modality, Vec<f64>)> {
        self.entries
    }
}

pub fn fuse(mut parts: Vec<(Modality, Vec<f64>)>) -> Result<FeatureBundle> {
    if parts.is_empty() {
        return Err(Error::EmptyInput("no modality survived filtering"));
    }
    parts.sort_by_key(|(m, _)| *m);
    if let Some(w) = parts.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput(format!("duplicate modality `{}`", w[0].0)));
    }
    Ok(FeatureBundle { entries: parts })
}
