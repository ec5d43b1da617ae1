//! Synthetic datasets for benchmarks and tests.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::linalg::Matrix;

/// Two Gaussian blobs, `n_per` points each, labeled 0 and 1.
pub fn two_clusters(n_per: usize, centers: (&[f64], &[f64]), noise_sd: f64, seed: u64) -> Dataset {
    assert_eq!(centers.0.len(), centers.1.len());
    let d = centers.0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * n_per);
    let mut labels = Vec::with_capacity(2 * n_per);
    for (class, center) in [(0usize, centers.0), (1usize, centers.1)] {
        for _ in 0..n_per {
            let row: Vec<f64> = center
                .iter()
                .map(|c| c + noise_sd * normal(&mut rng))
                .collect();
            rows.push(row);
            labels.push(class);
        }
    }
    let mut ds = Dataset::new(Matrix::from_rows(&rows), labels, "two_clusters");
    ds.label_names = vec!["0".into(), "1".into()];
    let _ = d;
    ds
}

/// Copy of `ds` with `fraction` of the labels flipped to a different class,
/// chosen deterministically from `seed`.
pub fn with_label_noise(ds: &Dataset, fraction: f64, seed: u64) -> Dataset {
    assert!((0.0..=1.0).contains(&fraction));
    let classes = ds.present_classes();
    assert!(classes.len() >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();
    let n_flip = ((ds.n() as f64) * fraction).round() as usize;
    let mut order: Vec<usize> = (0..ds.n()).collect();
    // Fisher-Yates prefix
    for i in 0..n_flip.min(ds.n()) {
        let j = rng.random_range(i..ds.n());
        order.swap(i, j);
    }
    for &i in order.iter().take(n_flip) {
        let current = out.labels[i];
        let alternatives: Vec<usize> = classes.iter().copied().filter(|&c| c != current).collect();
        out.labels[i] = alternatives[rng.random_range(0..alternatives.len())];
    }
    out.name = format!("{}_noisy", ds.name);
    out
}

/// Standard normal via Box-Muller.
fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
