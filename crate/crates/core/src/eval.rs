//! Per-step confusion counts, the five derived metrics and the per-modality
//! report tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modality::Modality;

pub const STEPS: usize = 7;
pub const CSV_HEADER: &str = "step,precision,recall,f1,specificity,accuracy";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepConfusion {
    pub step: usize,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl StepConfusion {
    pub fn new(step: usize) -> Self {
        StepConfusion { step, ..Default::default() }
    }

    pub fn record_outcome(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn merge(&mut self, other: &StepConfusion) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

impl Metrics {
    pub fn as_array(&self) -> [Option<f64>; 5] {
        [self.precision, self.recall, self.f1, self.specificity, self.accuracy]
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(c: &StepConfusion) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::EmptyConfusion);
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    // 2PR / (P + R) reduces to 2TP / (2TP + FP + FN) on counts; the count
    // form is exact whenever both rates are defined and not both zero.
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        _ => None,
    };
    Ok(Metrics {
        precision,
        recall,
        f1,
        specificity: ratio(c.tn, c.tn + c.fp),
        accuracy: ratio(c.tp + c.tn, c.total()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityReport {
    pub modality: Modality,
    /// Indexed by step - 1.
    pub steps: Vec<Metrics>,
}

impl ModalityReport {
    pub fn from_confusions(modality: Modality, confusions: &[StepConfusion]) -> Result<Self> {
        let steps = (1..=STEPS)
            .map(|step| {
                let c = confusions
                    .iter()
                    .find(|c| c.step == step)
                    .ok_or_else(|| Error::IncompleteRun { modality: modality.to_string(), step })?;
                metrics(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModalityReport { modality, steps })
    }

    pub fn mean_accuracy(&self) -> Option<f64> {
        let acc: Option<Vec<f64>> = self.steps.iter().map(|m| m.accuracy).collect();
        acc.map(|a| a.iter().sum::<f64>() / a.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (i, m) in self.steps.iter().enumerate() {
            let cells: Vec<String> = m.as_array().iter().map(|v| fmt_metric(*v)).collect();
            let _ = writeln!(out, "{},{}", i + 1, cells.join(","));
        }
        out
    }
}

pub fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.3}"),
        None => "n/a".to_string(),
    }
}

fn parse_cell(s: &str) -> std::result::Result<Option<f64>, String> {
    if s == "n/a" {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(Some(v))
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Reads a `report_<modality>.csv` file back.
pub fn parse_report_csv(modality: Modality, path: &Path, text: &str) -> Result<ModalityReport> {
    let csv_err = |line: u64, message: String| Error::Csv { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(csv_err(1, format!("expected header `{CSV_HEADER}`")));
    }
    let mut steps: Vec<Option<Metrics>> = vec![None; STEPS];
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let step: usize = row[0]
            .parse()
            .map_err(|_| csv_err(line, format!("`{}` is not a step number", &row[0])))?;
        if !(1..=STEPS).contains(&step) {
            return Err(csv_err(line, format!("step {step} is outside 1..={STEPS}")));
        }
        let mut vals = [None; 5];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = parse_cell(&row[k + 1]).map_err(|m| csv_err(line, m))?;
        }
        if steps[step - 1].is_some() {
            return Err(csv_err(line, format!("step {step} appears twice")));
        }
        steps[step - 1] = Some(Metrics {
            precision: vals[0],
            recall: vals[1],
            f1: vals[2],
            specificity: vals[3],
            accuracy: vals[4],
        });
    }
    let steps = steps
        .into_iter()
        .enumerate()
        .map(|(i, m)| m.ok_or_else(|| Error::IncompleteRun { modality: modality.to_string(), step: i + 1 }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModalityReport { modality, steps })
}

const COLUMNS: [&str; 5] = ["Precision", "Recall", "F1-score", "Specificity", "Accuracy"];

/// One table per modality. With `band`, every cell below it is bolded and
/// marked, and a summary line counts them.
pub fn to_markdown(reports: &[ModalityReport], band: Option<f64>) -> String {
    let mut out = String::from("# Performance metrics by pipeline step\n");
    let mut flagged = 0usize;
    for r in reports {
        let _ = write!(out, "\n## {} performance metrics\n\n| Step |", r.modality.title());
        for c in COLUMNS {
            let _ = write!(out, " {c} |");
        }
        out.push_str("\n|---|---|---|---|---|---|\n");
        for (i, m) in r.steps.iter().enumerate() {
            let _ = write!(out, "| Step {} |", i + 1);
            for v in m.as_array() {
                let cell = fmt_metric(v);
                match (band, v) {
                    (Some(b), Some(x)) if x < b => {
                        flagged += 1;
                        let _ = write!(out, " **{cell}** (< {b}) |");
                    }
                    _ => {
                        let _ = write!(out, " {cell} |");
                    }
                }
            }
            out.push('\n');
        }
    }
    if let Some(b) = band {
        let _ = write!(out, "\n{flagged} cell(s) below the {b} band.\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(tp: u64, tn: u64, fp: u64, fn_: u64) -> StepConfusion {
        StepConfusion { step: 1, tp, tn, fp, fn_ }
    }

    #[test]
    fn record_outcome_cells() {
        let mut c = StepConfusion::new(1);
        c.record_outcome(true, true);
        assert_eq!(c.tp, 1);
        c.record_outcome(false, true);
        assert_eq!(c.fn_, 1);
        c.record_outcome(true, false);
        c.record_outcome(false, false);
        assert_eq!((c.fp, c.tn, c.total()), (1, 1, 4));
    }

    #[test]
    fn ninety_percent_everywhere() {
        let m = metrics(&conf(90, 90, 10, 10)).unwrap();
        for v in m.as_array() {
            assert_eq!(v, Some(0.9));
        }
    }

    #[test]
    fn perfect_and_undefined() {
        let m = metrics(&conf(5, 7, 0, 0)).unwrap();
        assert!(m.as_array().iter().all(|v| *v == Some(1.0)));
        let m = metrics(&conf(0, 3, 0, 4)).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.f1, None);
        let m = metrics(&conf(0, 3, 2, 4)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (Some(0.0), Some(0.0), None));
        assert!(matches!(metrics(&conf(0, 0, 0, 0)), Err(Error::EmptyConfusion)));
    }

    #[test]
    fn rendering() {
        assert_eq!(fmt_metric(Some(0.93245)), "0.932");
        assert_eq!(fmt_metric(None), "n/a");
        let confusions: Vec<_> = (1..=STEPS).map(|s| StepConfusion { step: s, ..conf(9, 8, 1, 2) }).collect();
        let r = ModalityReport::from_confusions(Modality::Visual, &confusions).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + STEPS);
        assert_eq!(csv.lines().next(), Some(CSV_HEADER));
        let md = to_markdown(&[r.clone(), r.clone(), r], Some(0.85));
        assert_eq!(md.matches("performance metrics\n").count(), 3);
        assert_eq!(md.lines().filter(|l| l.starts_with("| Step ") && !l.starts_with("| Step |")).count(), 3 * STEPS);

        let missing: Vec<_> = confusions.iter().filter(|c| c.step != 4).copied().collect();
        assert!(matches!(
            ModalityReport::from_confusions(Modality::Tactile, &missing),
            Err(Error::IncompleteRun { step: 4, .. })
        ));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let confusions: Vec<_> = (1..=STEPS).map(|s| StepConfusion { step: s, ..conf(0, 8, 0, 2) }).collect();
        let r = ModalityReport::from_confusions(Modality::Auditory, &confusions).unwrap();
        let text = r.to_csv();
        let back = parse_report_csv(Modality::Auditory, Path::new("r.csv"), &text).unwrap();
        assert_eq!(back.to_csv(), text);
        let broken = text.replacen("0.800", "zero", 1);
        match parse_report_csv(Modality::Auditory, Path::new("r.csv"), &broken) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
