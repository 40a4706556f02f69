//! One-vs-one RBF support vector machine with a built-in standardiser.

use std::path::Path;

use rfa_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{ClassifierError, Result};
use crate::smo::{self, KernelMatrix, SolverParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Relative standard deviation below which a column counts as constant.
const ZERO_SPREAD: f64 = 1e-12;

/// Per-feature z-scoring fitted on training data. Constant features (up to
/// rounding of the mean) keep a scale of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > ZERO_SPREAD * (1.0 + m.abs()) && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self { c, gamma, tol: 1e-3 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ClassifierError::InvalidParameter(format!("C = {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(ClassifierError::InvalidParameter(format!("gamma = {}", self.gamma)));
        }
        if !(self.tol > 0.0) {
            return Err(ClassifierError::InvalidParameter(format!("tol = {}", self.tol)));
        }
        Ok(())
    }
}

/// Binary machine separating `label_set[positive]` (decision > 0) from
/// `label_set[negative]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: usize,
    pub negative: usize,
    /// Standardised support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i * alpha_i`, each within `[-C, C]`.
    pub dual_coefs: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinaryMachine {
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * kernel.eval(sv, x))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub label_set: Vec<String>,
    pub standardizer: Standardizer,
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub machines: Vec<BinaryMachine>,
}

/// Feature matrix and labels of a labelled dataset, rejecting unlabelled
/// rows and non-finite values.
pub fn labelled_rows(ds: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let mut x = Vec::with_capacity(ds.len());
    let mut y = Vec::with_capacity(ds.len());
    for r in &ds.rows {
        let label = r
            .label
            .clone()
            .ok_or_else(|| ClassifierError::MissingLabel(r.source_id.clone()))?;
        if let Some(i) = r.values.iter().position(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite {
                row: r.source_id.clone(),
                column: ds.feature_names.get(i).cloned().unwrap_or_default(),
            });
        }
        x.push(r.values.clone());
        y.push(label);
    }
    Ok((x, y))
}

/// Trains on raw (unstandardised) rows. `y[i]` indexes into `label_set`.
pub fn fit_rows(
    x: &[Vec<f64>],
    y: &[usize],
    label_set: &[String],
    feature_names: &[String],
    params: &SvmParams,
) -> Result<SvmModel> {
    params.validate()?;
    let present: std::collections::BTreeSet<usize> = y.iter().copied().collect();
    if present.len() < 2 {
        return Err(ClassifierError::TooFewClasses(present.len()));
    }
    if let Some(missing) = (0..label_set.len()).find(|i| !present.contains(i)) {
        return Err(ClassifierError::TooFewSamples {
            label: label_set[missing].clone(),
            count: 0,
            needed: 1,
        });
    }
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let kernel = Kernel::Rbf { gamma: params.gamma };

    let k = label_set.len();
    let mut machines = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
            let signs: Vec<f64> = idx.iter().map(|&i| if y[i] == a { 1.0 } else { -1.0 }).collect();
            let km = KernelMatrix::from_fn(idx.len(), |i, j| kernel.eval(&z[idx[i]], &z[idx[j]]));
            let sol = smo::solve(
                &km,
                &signs,
                &SolverParams {
                    tol: params.tol,
                    ..SolverParams::new(params.c)
                },
            );
            let mut support_vectors = Vec::new();
            let mut dual_coefs = Vec::new();
            for (t, &alpha) in sol.alpha.iter().enumerate() {
                if alpha > 0.0 {
                    support_vectors.push(z[idx[t]].clone());
                    dual_coefs.push(signs[t] * alpha);
                }
            }
            machines.push(BinaryMachine {
                positive: a,
                negative: b,
                support_vectors,
                dual_coefs,
                rho: sol.rho,
                objective: sol.objective,
                kkt_gap: sol.kkt_gap,
                iterations: sol.iterations,
                converged: sol.converged,
            });
        }
    }

    Ok(SvmModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_names: feature_names.to_vec(),
        label_set: label_set.to_vec(),
        standardizer,
        kernel,
        c: params.c,
        tol: params.tol,
        machines,
    })
}

/// Trains on a labelled dataset; the label set is the sorted set of labels.
pub fn fit(ds: &Dataset, params: &SvmParams) -> Result<SvmModel> {
    let (x, labels) = labelled_rows(ds)?;
    let label_set = ds.label_set();
    let y: Vec<usize> = labels
        .iter()
        .map(|l| label_set.binary_search(l).expect("label from this dataset"))
        .collect();
    fit_rows(&x, &y, &label_set, &ds.feature_names, params)
}

impl SvmModel {
    /// Index into `label_set` of the predicted class for a raw row.
    ///
    /// Each pairwise machine casts one vote; ties between classes are
    /// broken by the summed pairwise decision values, then by the lower
    /// class index.
    pub fn predict_index(&self, row: &[f64]) -> usize {
        let z = self.standardizer.transform_row(row);
        let k = self.label_set.len();
        let mut votes = vec![0usize; k];
        let mut score = vec![0.0; k];
        for m in &self.machines {
            let d = m.decision(&self.kernel, &z);
            if d > 0.0 {
                votes[m.positive] += 1;
            } else {
                votes[m.negative] += 1;
            }
            score[m.positive] += d;
            score[m.negative] -= d;
        }
        (0..k)
            .max_by(|&a, &b| {
                votes[a]
                    .cmp(&votes[b])
                    .then(score[a].total_cmp(&score[b]))
                    .then(b.cmp(&a))
            })
            .unwrap_or(0)
    }

    pub fn predict(&self, row: &[f64]) -> &str {
        &self.label_set[self.predict_index(row)]
    }

    pub fn predict_rows(&self, x: &[Vec<f64>]) -> Vec<usize> {
        x.iter().map(|r| self.predict_index(r)).collect()
    }

    /// Errors name the first column that differs from the model schema.
    pub fn check_schema(&self, feature_names: &[String]) -> Result<()> {
        let n = self.feature_names.len().max(feature_names.len());
        for i in 0..n {
            let expected = self.feature_names.get(i);
            let found = feature_names.get(i);
            if expected != found {
                return Err(ClassifierError::SchemaMismatch {
                    index: i,
                    expected: expected.cloned().unwrap_or_else(|| "<none>".into()),
                    found: found.cloned().unwrap_or_else(|| "<none>".into()),
                });
            }
        }
        Ok(())
    }

    pub fn n_support_vectors(&self) -> usize {
        self.machines.iter().map(|m| m.support_vectors.len()).sum()
    }

    pub fn max_kkt_gap(&self) -> f64 {
        self.machines.iter().map(|m| m.kkt_gap).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: SvmModel = serde_json::from_str(s)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::FormatVersion(model.format_version));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
