#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rfa_core::{Dataset, Sample};

pub fn dataset(x: Vec<Vec<f64>>, labels: Vec<String>) -> Dataset {
    let d = x.first().map_or(0, Vec::len);
    Dataset {
        feature_names: (0..d).map(|j| format!("f{j:02}")).collect(),
        rows: x
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (values, label))| Sample {
                source_id: format!("s{i:04}"),
                label: Some(label),
                values,
            })
            .collect(),
    }
}

/// `k` unit-variance Gaussian blobs in `d` dimensions whose centres are
/// pairwise `sep` standard deviations apart.
pub fn blobs(k: usize, d: usize, per_class: usize, sep: f64, seed: u64) -> Dataset {
    assert!(k <= d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let offset = sep / 2f64.sqrt();
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for c in 0..k {
        for _ in 0..per_class {
            let mut row: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
            row[c] += offset;
            x.push(row);
            labels.push(format!("class{c}"));
        }
    }
    dataset(x, labels)
}
