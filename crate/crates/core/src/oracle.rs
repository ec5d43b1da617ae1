//! Brute-force reference routes used to certify the solvers and objectives.
//!
//! Everything here trades speed for transparency: exhaustive enumeration and
//! literal formula evaluation, independent of the iterative code paths. Only
//! practical for small instances; used by the verification suites.

use crate::linalg::{dot, solve_pivoted, Matrix};
use crate::optim::{BoxQpProblem, L1QuadraticProblem};
use crate::sscl::{Hyperparams, TrainState};

/// Global minimum of an L1-regularized quadratic by enumerating all 3ᵏ sign
/// patterns and solving the equality-constrained quadratic of each consistent
/// one. Exact for positive definite P; patterns with singular subsystems are
/// skipped. Returns `(argmin, min objective)`.
pub fn l1qp_minimum_by_sign_enumeration(prob: &L1QuadraticProblem) -> (Vec<f64>, f64) {
    let k = prob.dim();
    assert!(k <= 12, "sign enumeration is exponential in k");
    let mut best_v = vec![0.0; k];
    let mut best_f = prob.objective(&best_v);

    let patterns = 3usize.pow(k as u32);
    for code in 0..patterns {
        let mut c = code;
        let mut signs = vec![0i8; k];
        for s in signs.iter_mut() {
            *s = match c % 3 {
                0 => 0,
                1 => 1,
                _ => -1,
            };
            c /= 3;
        }
        let support: Vec<usize> = (0..k).filter(|&i| signs[i] != 0).collect();
        if support.is_empty() {
            continue; // zero pattern already covered
        }
        let a = support.len();
        let mut paa = Matrix::zeros(a, a);
        let mut rhs = vec![0.0; a];
        for (r, &i) in support.iter().enumerate() {
            for (cc, &j) in support.iter().enumerate() {
                paa[(r, cc)] = prob.p[(i, j)];
            }
            rhs[r] = -(prob.q[i] + prob.gamma * signs[i] as f64);
        }
        let Some(sol) = solve_pivoted(&paa, &rhs, 1e-12) else {
            continue;
        };
        // keep only sign-consistent stationary points
        if sol
            .iter()
            .zip(&support)
            .any(|(&v, &i)| v * signs[i] as f64 <= 0.0)
        {
            continue;
        }
        let mut v = vec![0.0; k];
        for (&i, &s) in support.iter().zip(&sol) {
            v[i] = s;
        }
        let f = prob.objective(&v);
        if f < best_f {
            best_f = f;
            best_v = v;
        }
    }
    (best_v, best_f)
}

/// Global maximum of the box QP by enumerating all 3ⁿ active-set patterns
/// (each coordinate at 0, at the upper bound, or free) and solving the free
/// block. Feasible candidates only; singular free blocks are skipped.
/// Returns `(argmax, max objective)`.
pub fn boxqp_maximum_by_active_set_enumeration(prob: &BoxQpProblem) -> (Vec<f64>, f64) {
    let n = prob.dim();
    assert!(n <= 12, "active-set enumeration is exponential in n");
    let upper = prob.upper;
    let mut best_d = vec![0.0; n];
    let mut best_f = prob.objective(&best_d);

    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        let mut c = code;
        // 0 = at zero, 1 = at upper, 2 = free
        let mut kind = vec![0u8; n];
        for k in kind.iter_mut() {
            *k = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| kind[i] == 2).collect();
        let mut delta = vec![0.0; n];
        for i in 0..n {
            if kind[i] == 1 {
                delta[i] = upper;
            }
        }
        if !free.is_empty() {
            let f = free.len();
            let mut mff = Matrix::zeros(f, f);
            let mut rhs = vec![0.0; f];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    mff[(r, cc)] = prob.m[(i, j)];
                }
                let bound_term: f64 = (0..n)
                    .filter(|&j| kind[j] == 1)
                    .map(|j| prob.m[(i, j)] * upper)
                    .sum();
                rhs[r] = 1.0 - bound_term;
            }
            let Some(sol) = solve_pivoted(&mff, &rhs, 1e-12) else {
                continue;
            };
            if sol.iter().any(|&v| !(-1e-10..=upper + 1e-10).contains(&v)) {
                continue;
            }
            for (&i, &s) in free.iter().zip(&sol) {
                delta[i] = s.clamp(0.0, upper);
            }
        }
        let f = prob.objective(&delta);
        if f > best_f {
            best_f = f;
            best_d = delta;
        }
    }
    (best_d, best_f)
}

/// The dual objective evaluated term by term from its double-sum form,
/// recomputing every reconstruction from scratch. Cross-checks the cached
/// single-sum evaluation in the learner.
#[allow(clippy::needless_range_loop)]
pub fn dual_objective_pairwise(state: &TrainState<'_>, hyper: &Hyperparams) -> f64 {
    let n = state.n();
    let recon: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; state.dim()];
            for (j, &id) in state.context().neighbors(i).iter().enumerate() {
                let vj = state.coeff(i)[j];
                for (rv, xv) in r.iter_mut().zip(state.features().row(id)) {
                    *rv += vj * xv;
                }
            }
            r
        })
        .collect();

    let mut double_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            double_sum += state.delta()[i]
                * state.delta()[j]
                * state.labels()[i]
                * state.labels()[j]
                * dot(&recon[i], &recon[j]);
        }
    }
    let mut recon_err = 0.0;
    let mut l1 = 0.0;
    for i in 0..n {
        recon_err += state
            .features()
            .row(i)
            .iter()
            .zip(&recon[i])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        l1 += state.coeff(i).iter().map(|v| v.abs()).sum::<f64>();
    }
    -0.5 * double_sum
        + hyper.beta * recon_err
        + hyper.gamma * l1
        + state.delta().iter().sum::<f64>()
}

/// 1-d grid minimizer for closed-form cross-checks.
pub fn grid_min_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    assert!(steps >= 2 && hi > lo);
    let mut best = (lo, f(lo));
    for s in 1..=steps {
        let x = lo + (hi - lo) * s as f64 / steps as f64;
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}
