//! Accuracy, weighted F1 and confusion matrices.

use std::fmt::Write as _;

use rfa_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{ClassifierError, Result};
use crate::model::{labelled_rows, SvmModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Rows of `confusion` are true classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub confusion_row_pct: Vec<Vec<f64>>,
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub n_test: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(labels: Vec<String>, confusion: Vec<Vec<u64>>) -> Result<Self> {
        let k = labels.len();
        if confusion.len() != k || confusion.iter().any(|r| r.len() != k) {
            return Err(ClassifierError::InvalidParameter(format!(
                "confusion matrix must be {k}x{k}"
            )));
        }
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(ClassifierError::EmptyTestSet);
        }
        let trace: u64 = (0..k).map(|i| confusion[i][i]).sum();
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let support: u64 = confusion[c].iter().sum();
                let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassMetrics {
                    label: labels[c].clone(),
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let weighted_f1 = per_class
            .iter()
            .map(|m| m.support as f64 / total as f64 * m.f1)
            .sum();
        let confusion_row_pct = confusion
            .iter()
            .map(|r| {
                let s: u64 = r.iter().sum();
                r.iter().map(|&v| 100.0 * ratio(v, s)).collect()
            })
            .collect();
        Ok(Self {
            labels,
            confusion,
            confusion_row_pct,
            accuracy: trace as f64 / total as f64,
            weighted_f1,
            per_class,
            n_test: total,
        })
    }

    pub fn from_predictions(labels: Vec<String>, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        let k = labels.len();
        let mut confusion = vec![vec![0u64; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        Self::from_confusion(labels, confusion)
    }

    /// Plain-text summary: headline metrics, per-class table and the
    /// confusion matrix with row percentages.
    pub fn table(&self) -> String {
        let w = self.labels.iter().map(String::len).max().unwrap_or(0).max(5);
        let mut s = String::new();
        let _ = writeln!(s, "test samples: {}", self.n_test);
        let _ = writeln!(s, "accuracy:     {:.4}", self.accuracy);
        let _ = writeln!(s, "weighted F1:  {:.4}", self.weighted_f1);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<w$}  precision  recall  f1      support", "class");
        for m in &self.per_class {
            let _ = writeln!(
                s,
                "{:<w$}  {:<9.4}  {:<6.4}  {:<6.4}  {}",
                m.label, m.precision, m.recall, m.f1, m.support
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "confusion (rows = true, columns = predicted, % of row)");
        let cells: Vec<Vec<String>> = self
            .confusion
            .iter()
            .zip(&self.confusion_row_pct)
            .map(|(row, pct)| row.iter().zip(pct).map(|(c, p)| format!("{c} ({p:.0}%)")).collect())
            .collect();
        let cw = cells.iter().flatten().map(String::len).chain([w]).max().unwrap_or(w);
        let _ = write!(s, "{:<w$}", "");
        for l in &self.labels {
            let _ = write!(s, "  {l:>cw$}");
        }
        let _ = writeln!(s);
        for (l, row) in self.labels.iter().zip(&cells) {
            let _ = write!(s, "{l:<w$}");
            for cell in row {
                let _ = write!(s, "  {cell:>cw$}");
            }
            let _ = writeln!(s);
        }
        s
    }

    /// CSV with a `true\predicted` header row, one row per true class.
    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for l in &self.labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            s.push_str(l);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Label indices of `test` under `model.label_set`, validating schema,
/// labels and values.
pub(crate) fn prepare_test(model: &SvmModel, test: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    model.check_schema(&test.feature_names)?;
    if test.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let (x, labels) = labelled_rows(test)?;
    let y = labels
        .iter()
        .map(|l| {
            model.label_set.binary_search(l).map_err(|_| {
                ClassifierError::InvalidParameter(format!("test label '{l}' is not in the model label set"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((x, y))
}

pub fn evaluate(model: &SvmModel, test: &Dataset) -> Result<EvalReport> {
    let (x, y) = prepare_test(model, test)?;
    let pred = model.predict_rows(&x);
    EvalReport::from_predictions(model.label_set.clone(), &y, &pred)
}
