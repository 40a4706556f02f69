//! Cross-validated grid search over `(C, gamma)` followed by a refit on the
//! full training split.

use rayon::prelude::*;
use rfa_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{ClassifierError, Result};
use crate::model::{fit_rows, labelled_rows, Standardizer, SvmModel, SvmParams};
use crate::split::stratified_folds;

pub const DEFAULT_C_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.001, 0.01, 0.1, 1.0];
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Adds `1 / (d * mean feature variance)` of the standardised training
    /// data to the gamma values.
    pub heuristic_gamma: bool,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            c: DEFAULT_C_GRID.to_vec(),
            gamma: DEFAULT_GAMMA_GRID.to_vec(),
            heuristic_gamma: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub grid: Grid,
    pub folds: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            grid: Grid::default(),
            folds: DEFAULT_FOLDS,
            seed: 0,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub points: Vec<GridPoint>,
    pub best_c: f64,
    pub best_gamma: f64,
    pub best_cv_accuracy: f64,
    pub heuristic_gamma: Option<f64>,
    pub folds: usize,
    pub seed: u64,
}

/// `1 / (d * mean variance)` over the standardised columns, or `None` when
/// every column is constant.
pub fn heuristic_gamma(x: &[Vec<f64>]) -> Option<f64> {
    let z = Standardizer::fit(x).transform(x);
    let d = z.first()?.len();
    let n = z.len() as f64;
    let mut total = 0.0;
    for j in 0..d {
        let m = z.iter().map(|r| r[j]).sum::<f64>() / n;
        total += z.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
    }
    let mean_var = total / d as f64;
    (mean_var > 0.0).then(|| 1.0 / (d as f64 * mean_var))
}

fn gamma_values(grid: &Grid, heuristic: Option<f64>) -> Vec<f64> {
    let mut g = grid.gamma.clone();
    if let Some(h) = heuristic {
        g.push(h);
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn accuracy(model: &SvmModel, x: &[Vec<f64>], y: &[usize]) -> f64 {
    let correct = x
        .iter()
        .zip(y)
        .filter(|(r, &t)| model.predict_index(r) == t)
        .count();
    correct as f64 / y.len() as f64
}

/// Grid search with stratified k-fold cross-validation, then a refit of the
/// best pair on all of `ds`. Ties in mean CV accuracy go to the smallest C,
/// then the smallest gamma.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(SvmModel, GridReport)> {
    let (x, labels) = labelled_rows(ds)?;
    let label_set = ds.label_set();
    if label_set.len() < 2 {
        return Err(ClassifierError::TooFewClasses(label_set.len()));
    }
    if cfg.grid.c.is_empty() || (cfg.grid.gamma.is_empty() && !cfg.grid.heuristic_gamma) {
        return Err(ClassifierError::InvalidParameter("empty hyperparameter grid".into()));
    }
    let y: Vec<usize> = labels
        .iter()
        .map(|l| label_set.binary_search(l).expect("label from this dataset"))
        .collect();
    let fold_of = stratified_folds(&labels, cfg.folds, cfg.seed)?;

    let mut cs = cfg.grid.c.clone();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    let heuristic = if cfg.grid.heuristic_gamma {
        heuristic_gamma(&x)
    } else {
        None
    };
    let gammas = gamma_values(&cfg.grid, heuristic);

    let mut folds = Vec::with_capacity(cfg.folds);
    for f in 0..cfg.folds {
        let (train_idx, val_idx): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| fold_of[i] != f);
        let classes: std::collections::BTreeSet<usize> = train_idx.iter().map(|&i| y[i]).collect();
        if classes.len() < 2 || val_idx.is_empty() {
            return Err(ClassifierError::DegenerateFold(f));
        }
        let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
            (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
        };
        folds.push((pick(&train_idx), pick(&val_idx)));
    }

    let jobs: Vec<(usize, usize, usize)> = (0..cs.len())
        .flat_map(|ci| (0..gammas.len()).flat_map(move |gi| (0..cfg.folds).map(move |f| (ci, gi, f))))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(ci, gi, f)| {
            let ((tx, ty), (vx, vy)) = &folds[f];
            let params = SvmParams {
                c: cs[ci],
                gamma: gammas[gi],
                tol: cfg.tol,
            };
            let model = fit_rows(tx, ty, &label_set, &ds.feature_names, &params)?;
            Ok(accuracy(&model, vx, vy))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut points = Vec::with_capacity(cs.len() * gammas.len());
    for (p, chunk) in scores.chunks(cfg.folds).enumerate() {
        let (ci, gi) = (p / gammas.len(), p % gammas.len());
        points.push(GridPoint {
            c: cs[ci],
            gamma: gammas[gi],
            fold_accuracies: chunk.to_vec(),
            mean_accuracy: chunk.iter().sum::<f64>() / chunk.len() as f64,
        });
    }
    // Points are ordered by C then gamma, so the first maximum wins ties.
    let best = points
        .iter()
        .fold(None::<&GridPoint>, |acc, p| match acc {
            Some(b) if b.mean_accuracy >= p.mean_accuracy - 1e-12 => Some(b),
            _ => Some(p),
        })
        .expect("non-empty grid");

    let params = SvmParams {
        c: best.c,
        gamma: best.gamma,
        tol: cfg.tol,
    };
    let model = fit_rows(&x, &y, &label_set, &ds.feature_names, &params)?;
    let report = GridReport {
        best_c: best.c,
        best_gamma: best.gamma,
        best_cv_accuracy: best.mean_accuracy,
        points,
        heuristic_gamma: heuristic,
        folds: cfg.folds,
        seed: cfg.seed,
    };
    Ok((model, report))
}
