//! Permutation feature importance: the drop in test accuracy when a single
//! column is shuffled.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rfa_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{ClassifierError, Result};
use crate::metrics::prepare_test;
use crate::model::SvmModel;

pub const DEFAULT_N_REPEATS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_drop: f64,
    pub std_drop: f64,
}

/// Importances sorted by descending mean accuracy drop. Every column uses
/// its own random stream, so results do not depend on thread scheduling.
pub fn permutation_importance(
    model: &SvmModel,
    test: &Dataset,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>> {
    if n_repeats == 0 {
        return Err(ClassifierError::NoRepeats);
    }
    let (x, y) = prepare_test(model, test)?;
    let acc = |rows: &[Vec<f64>]| {
        let hits = rows.iter().zip(&y).filter(|(r, &t)| model.predict_index(r) == t).count();
        hits as f64 / y.len() as f64
    };
    let baseline = acc(&x);

    let mut out: Vec<FeatureImportance> = (0..model.feature_names.len())
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let column: Vec<f64> = x.iter().map(|r| r[j]).collect();
            let mut rows = x.clone();
            let drops: Vec<f64> = (0..n_repeats)
                .map(|_| {
                    let mut col = column.clone();
                    col.shuffle(&mut rng);
                    for (r, v) in rows.iter_mut().zip(col) {
                        r[j] = v;
                    }
                    baseline - acc(&rows)
                })
                .collect();
            let n = drops.len() as f64;
            let mean = drops.iter().sum::<f64>() / n;
            let var = drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
            FeatureImportance {
                feature: model.feature_names[j].clone(),
                mean_drop: mean,
                std_drop: var.sqrt(),
            }
        })
        .collect();
    out.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop));
    Ok(out)
}

/// Text table of the `top` most important features.
pub fn importance_table(ranked: &[FeatureImportance], top: usize) -> String {
    let w = ranked.iter().take(top).map(|f| f.feature.len()).max().unwrap_or(7).max(7);
    let mut s = format!("permutation importance (mean accuracy drop), top {top}\n");
    s.push_str(&format!("{:>4}  {:<w$}  {:>9}  {:>9}\n", "rank", "feature", "mean", "std"));
    for (i, f) in ranked.iter().take(top).enumerate() {
        s.push_str(&format!(
            "{:>4}  {:<w$}  {:>9.4}  {:>9.4}\n",
            i + 1,
            f.feature,
            f.mean_drop,
            f.std_drop
        ));
    }
    s
}
