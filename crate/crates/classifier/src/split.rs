//! Stratified train/test splitting and k-fold assignment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rfa_core::Dataset;

use crate::error::{ClassifierError, Result};

/// Row indices grouped by label, in sorted label order.
fn by_class(labels: &[String]) -> BTreeMap<&str, Vec<usize>> {
    let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        m.entry(l.as_str()).or_default().push(i);
    }
    m
}

fn labels_of(ds: &Dataset) -> Result<Vec<String>> {
    ds.rows
        .iter()
        .map(|r| {
            r.label
                .clone()
                .ok_or_else(|| ClassifierError::MissingLabel(r.source_id.clone()))
        })
        .collect()
}

/// Per-class stratified split. Each class contributes
/// `round(n_c * test_fraction)` rows to the test set, clamped to
/// `[1, n_c - 1]`. Both halves keep the original row order.
pub fn split_dataset(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if test_fraction == 0.0 {
        return Err(ClassifierError::EmptyTestSet);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ClassifierError::InvalidFraction(test_fraction));
    }
    let labels = labels_of(ds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_idx = Vec::new();
    for (label, mut idx) in by_class(&labels) {
        if idx.len() < 2 {
            return Err(ClassifierError::TooFewSamples {
                label: label.to_string(),
                count: idx.len(),
                needed: 2,
            });
        }
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        test_idx.extend_from_slice(&idx[..n_test]);
    }
    test_idx.sort_unstable();
    let mut is_test = vec![false; ds.len()];
    for &i in &test_idx {
        is_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| !is_test[i]).collect();
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// Fold number for every row. Each class is shuffled and dealt round-robin
/// across the folds, continuing where the previous class stopped.
pub fn stratified_folds(labels: &[String], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(ClassifierError::InvalidParameter(format!("folds = {folds} (need >= 2)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for (label, mut idx) in by_class(labels) {
        if idx.len() < folds {
            return Err(ClassifierError::TooFewSamples {
                label: label.to_string(),
                count: idx.len(),
                needed: folds,
            });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}
