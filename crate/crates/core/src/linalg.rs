//! Dense row-major matrices and the few kernels the solvers need.

use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from a flat row-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `self * x` for a square or rectangular matrix, `x.len() == cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += c * x`
#[inline]
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Cholesky factorization of a symmetric positive definite matrix.
/// Returns the lower factor, or `None` if a pivot is not strictly positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    debug_assert_eq!(a.cols(), n);
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    debug_assert_eq!(b.len(), n);
    // forward: L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    // backward: Lᵀ x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `a x = b` for symmetric positive definite `a`, with a couple of
/// iterative refinement passes to push the residual toward machine precision.
/// Returns `None` when the factorization fails even after `fallback_ridge`
/// is added to the diagonal.
pub fn spd_solve_refined(a: &Matrix, b: &[f64], fallback_ridge: f64) -> Option<Vec<f64>> {
    let l = match cholesky(a) {
        Some(l) => l,
        None => {
            let n = a.rows();
            let mut ridged = a.clone();
            for i in 0..n {
                ridged[(i, i)] += fallback_ridge;
            }
            cholesky(&ridged)?
        }
    };
    let mut x = cholesky_solve(&l, b);
    for _ in 0..2 {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        let d = cholesky_solve(&l, &r);
        axpy(1.0, &d, &mut x);
    }
    Some(x)
}

/// Minimizes `½xᵀAx − bᵀx` (A symmetric PSD) by conjugate gradient from x0,
/// monotone in the objective and stable on singular systems. When a search
/// direction has (numerically) no curvature but nonzero slope — a singular,
/// inconsistent system — iteration stops and the normalized direction is
/// returned alongside the iterate.
pub fn cg_quadratic(a: &Matrix, b: &[f64], x0: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = b.len();
    let mut x = x0.to_vec();
    let ax = a.matvec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let b_scale = dot(b, b).max(1.0);
    let curv_floor = 1e-14
        * a.data()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
    let max_iter = (2 * n).min(200);
    for _ in 0..max_iter {
        if rs <= 1e-28 * b_scale {
            break;
        }
        let ap = a.matvec(&p);
        let p_ap = dot(&p, &ap);
        let p_norm_sq = dot(&p, &p);
        if p_ap <= curv_floor * p_norm_sq {
            let scale = p_norm_sq.sqrt();
            let dir = p.iter().map(|v| v / scale).collect();
            return (x, Some(dir));
        }
        let step = rs / p_ap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        let rs_new = dot(&r, &r);
        let ratio = rs_new / rs;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + ratio * *pi;
        }
        rs = rs_new;
    }
    (x, None)
}

/// Gaussian elimination with partial pivoting. Returns `None` when a pivot
/// falls below `pivot_tol` (singular system).
#[allow(clippy::needless_range_loop)]
pub fn solve_pivoted(a: &Matrix, b: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let n = a.rows();
    debug_assert_eq!(a.cols(), n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, m[(perm[r], col)].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pivot_abs < pivot_tol {
            return None;
        }
        perm.swap(col, pivot_row);
        let p = perm[col];
        let pivot = m[(p, col)];
        for r in (col + 1)..n {
            let row = perm[r];
            let f = m[(row, col)] / pivot;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[(row, c)] -= f * m[(p, c)];
            }
            rhs[row] -= f * rhs[p];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let p = perm[col];
        let mut s = rhs[p];
        for c in (col + 1)..n {
            s -= m[(p, c)] * x[c];
        }
        x[col] = s / m[(p, col)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_small() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![3.0, 7.0]);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = spd_solve_refined(&a, &[1.0, 2.0], 1e-10).unwrap();
        let ax = a.matvec(&x);
        assert!((ax[0] - 1.0).abs() < 1e-12);
        assert!((ax[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn pivoted_solve_matches_cholesky_on_spd() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x1 = spd_solve_refined(&a, &[1.0, 2.0], 1e-12).unwrap();
        let x2 = solve_pivoted(&a, &[1.0, 2.0], 1e-12).unwrap();
        assert!((x1[0] - x2[0]).abs() < 1e-10);
        assert!((x1[1] - x2[1]).abs() < 1e-10);
    }

    #[test]
    fn pivoted_solve_detects_singularity() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve_pivoted(&a, &[1.0, 2.0], 1e-10).is_none());
    }
}
