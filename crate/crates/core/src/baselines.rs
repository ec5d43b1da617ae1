//! Context-based comparison classifiers: majority-vote KNN and
//! class-conditional sparse reconstruction (SRBC).

use crate::context::{gather_rows, query_rows};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::optim::{default_l1qp_max_iter, solve_l1_quadratic, L1QuadraticProblem, DEFAULT_TOL};
use crate::sscl::ASSEMBLY_RIDGE;

/// Majority vote over the k nearest training points; ties break toward the
/// lower class id. Expects the same feature space (typically standardized)
/// for training data and queries.
#[derive(Debug, Clone)]
pub struct KnnClassifier<'a> {
    pub train: &'a Dataset,
    pub k: usize,
}

impl<'a> KnnClassifier<'a> {
    pub fn new(train: &'a Dataset, k: usize) -> Result<Self> {
        if k < 1 || k > train.n() {
            return Err(Error::KOutOfRange {
                k,
                min: 1,
                max: train.n(),
            });
        }
        Ok(KnnClassifier { train, k })
    }
}

pub fn knn_predict(c: &KnnClassifier<'_>, x: &[f64]) -> Result<usize> {
    let (ids, _) = query_rows(&c.train.features, x, c.k)?;
    let mut counts: Vec<usize> = vec![0; c.train.class_count()];
    for id in ids {
        counts[c.train.labels[id]] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(class, _)| class)
        .unwrap())
}

/// Sparse-reconstruction classifier: reconstruct the query from each class's
/// full training dictionary under an L1 penalty and assign the class with the
/// smallest residual.
#[derive(Debug, Clone)]
pub struct SrbcClassifier<'a> {
    pub train: &'a Dataset,
    pub gamma: f64,
    /// Reconstruction weight; fixed at 1 so the residual objective is plain
    /// `‖x − X_c v‖² + γ‖v‖₁`.
    pub beta: f64,
    class_rows: Vec<(usize, Vec<usize>)>,
}

impl<'a> SrbcClassifier<'a> {
    pub fn new(train: &'a Dataset, gamma: f64) -> Result<Self> {
        if gamma < 0.0 {
            return Err(Error::InvalidHyperparams {
                reason: format!("gamma must be >= 0, got {gamma}"),
            });
        }
        let classes = train.present_classes();
        if classes.is_empty() {
            return Err(Error::SingleClass { found: 0 });
        }
        let class_rows = classes
            .into_iter()
            .map(|c| {
                let rows: Vec<usize> = (0..train.n()).filter(|&i| train.labels[i] == c).collect();
                (c, rows)
            })
            .collect();
        Ok(SrbcClassifier {
            train,
            gamma,
            beta: 1.0,
            class_rows,
        })
    }
}

pub fn srbc_predict(c: &SrbcClassifier<'_>, x: &[f64]) -> Result<usize> {
    if x.len() != c.train.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.train.dim(),
            got: x.len(),
        });
    }
    let mut best: Option<(f64, usize)> = None;
    for (class, rows) in &c.class_rows {
        let dict = gather_rows(&c.train.features, rows);
        let residual = reconstruction_residual(&dict, x, c.beta, c.gamma)?;
        if best.is_none_or(|(br, _)| residual < br) {
            best = Some((residual, *class));
        }
    }
    Ok(best.unwrap().1)
}

/// `min_v ‖x − Xv‖² + γ‖v‖₁` solved through the L1 quadratic kernel
/// (`P = 2β·XᵀX + ridge`, `q = −2β·Xᵀx`), returning the squared residual.
fn reconstruction_residual(dict: &Matrix, x: &[f64], beta: f64, gamma: f64) -> Result<f64> {
    let m = dict.rows();
    let mut p = Matrix::zeros(m, m);
    for a in 0..m {
        let ra = dict.row(a);
        for b in a..m {
            let v = 2.0 * beta * dot(ra, dict.row(b));
            p[(a, b)] = v;
            p[(b, a)] = v;
        }
        p[(a, a)] += ASSEMBLY_RIDGE;
    }
    let q: Vec<f64> = (0..m).map(|j| -2.0 * beta * dot(dict.row(j), x)).collect();
    let prob = L1QuadraticProblem::new(p, q, gamma)?;
    let (v, _) = solve_l1_quadratic(&prob, DEFAULT_TOL, default_l1qp_max_iter(m), None)?;
    let mut recon = vec![0.0; x.len()];
    for (j, &vj) in v.iter().enumerate() {
        if vj != 0.0 {
            crate::linalg::axpy(vj, dict.row(j), &mut recon);
        }
    }
    Ok(x.iter()
        .zip(&recon)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}
