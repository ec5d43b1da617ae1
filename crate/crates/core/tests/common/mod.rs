//! Shared helpers for the integration suites.
#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sscl_core::linalg::Matrix;

/// Random symmetric positive definite matrix: AᵀA + ridge·I.
pub fn random_pd(rng: &mut ChaCha8Rng, k: usize, ridge: f64) -> Matrix {
    let mut a = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = rng.random::<f64>() * 2.0 - 1.0;
        }
    }
    let mut p = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for l in 0..k {
                s += a[(l, i)] * a[(l, j)];
            }
            p[(i, j)] = s;
        }
    }
    for i in 0..k {
        p[(i, i)] += ridge;
    }
    p
}

/// Random symmetric PSD Gram matrix of `n` vectors in `dim` dimensions
/// (rank-deficient whenever dim < n).
pub fn random_psd_gram(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn random_vec(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> Vec<f64> {
    (0..k).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
