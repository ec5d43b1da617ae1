//! Active-sign-set solver for `min ½ vᵀPv + qᵀv + γ‖v‖₁` with P symmetric PSD.
//!
//! The solver keeps a working set of nonzero coordinates with fixed signs,
//! solves the smooth problem restricted to that orthant, and walks the segment
//! toward the smooth minimizer, stopping at the best objective among the sign
//! crossings. Coordinates enter the set one at a time when their subgradient
//! condition is violated, and leave when a line search zeroes them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::optim::SolverReport;

/// Canonical L1-regularized quadratic: `min ½ vᵀPv + qᵀv + γ‖v‖₁`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct L1QuadraticProblem {
    pub p: Matrix,
    pub q: Vec<f64>,
    pub gamma: f64,
}

impl L1QuadraticProblem {
    /// Validates symmetry (1e-10), a nonnegative diagonal, and γ ≥ 0.
    pub fn new(p: Matrix, q: Vec<f64>, gamma: f64) -> Result<Self> {
        if p.rows() != p.cols() || p.rows() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.rows(),
                got: q.len(),
            });
        }
        if !p.is_symmetric(1e-10) {
            return Err(Error::NotSymmetric {
                max_asym: p.max_asymmetry(),
            });
        }
        for i in 0..p.rows() {
            if p[(i, i)] < 0.0 {
                let mut direction = vec![0.0; p.rows()];
                direction[i] = 1.0;
                return Err(Error::Indefinite { direction });
            }
        }
        if gamma < 0.0 {
            return Err(Error::InvalidHyperparams {
                reason: format!("gamma must be >= 0, got {gamma}"),
            });
        }
        Ok(L1QuadraticProblem { p, q, gamma })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        let pv = self.p.matvec(v);
        0.5 * dot(v, &pv) + dot(&self.q, v) + self.gamma * v.iter().map(|x| x.abs()).sum::<f64>()
    }

    fn smooth_grad(&self, v: &[f64]) -> Vec<f64> {
        let mut g = self.p.matvec(v);
        for (gi, qi) in g.iter_mut().zip(&self.q) {
            *gi += qi;
        }
        g
    }
}

/// Max subdifferential violation: `|(Pv+q)ᵢ + γ·sign(vᵢ)|` on nonzero
/// coordinates, `max(0, |(Pv+q)ᵢ| − γ)` on zero ones.
pub fn l1q_kkt_residual(prob: &L1QuadraticProblem, v: &[f64]) -> Result<f64> {
    if v.len() != prob.dim() {
        return Err(Error::DimensionMismatch {
            expected: prob.dim(),
            got: v.len(),
        });
    }
    let g = prob.smooth_grad(v);
    let mut worst = 0.0f64;
    for (vi, gi) in v.iter().zip(&g) {
        let viol = if *vi != 0.0 {
            (gi + prob.gamma * vi.signum()).abs()
        } else {
            (gi.abs() - prob.gamma).max(0.0)
        };
        worst = worst.max(viol);
    }
    Ok(worst)
}

fn embed(active: &[usize], dense: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (&i, &x) in active.iter().zip(dense) {
        out[i] = x;
    }
    out
}

/// Solves the reduced smooth system over the active set, with the 1e-10 ridge
/// fallback when the reduced block is singular.
fn reduced_minimizer(
    prob: &L1QuadraticProblem,
    active: &[usize],
    signs: &[f64],
) -> Result<(Vec<f64>, Matrix)> {
    let a = active.len();
    let mut paa = Matrix::zeros(a, a);
    let mut rhs = vec![0.0; a];
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            paa[(r, c)] = prob.p[(i, j)];
        }
        rhs[r] = -(prob.q[i] + prob.gamma * signs[i]);
    }
    match crate::linalg::spd_solve_refined(&paa, &rhs, 1e-10) {
        Some(sol) => Ok((sol, paa)),
        None => {
            // Not repairable by the ridge: some direction has nonpositive
            // curvature. Surface the most negative diagonal direction.
            let worst = (0..a)
                .min_by(|&x, &y| paa[(x, x)].total_cmp(&paa[(y, y)]))
                .unwrap_or(0);
            let mut direction = vec![0.0; prob.dim()];
            direction[active[worst]] = 1.0;
            Err(Error::Indefinite { direction })
        }
    }
}

/// Discrete line search from `current` toward `target` over the active
/// coordinates: evaluates the objective at the full step and at every sign
/// crossing, returning the best strictly-improving point (with the slot that
/// crossed exactly to zero, if any). `None` when nothing improves.
/// Errors when the direction shows negative curvature.
#[allow(clippy::too_many_arguments)]
fn sign_step(
    prob: &L1QuadraticProblem,
    active: &[usize],
    current: &[f64],
    target: &[f64],
    paa: &Matrix,
    g_active: &[f64],
    f_current: f64,
) -> Result<Option<(Vec<f64>, Option<usize>)>> {
    let dir: Vec<f64> = target.iter().zip(current).map(|(t, c)| t - c).collect();
    if dir.iter().all(|&d| d == 0.0) {
        return Ok(None);
    }

    let pd = paa.matvec(&dir);
    let curvature = dot(&dir, &pd);
    if curvature < -1e-10 * dot(&dir, &dir).max(1.0) {
        return Err(Error::Indefinite {
            direction: embed(active, &dir, prob.dim()),
        });
    }

    // smooth part of f along the segment is quadratic in t; the L1 part is
    // evaluated per candidate
    let lin = dot(&dir, g_active);
    let smooth_0 = f_current - prob.gamma * current.iter().map(|x| x.abs()).sum::<f64>();
    let smooth_at = |t: f64| smooth_0 + t * lin + 0.5 * t * t * curvature;

    let mut candidates: Vec<(f64, Option<usize>)> = vec![(1.0, None)];
    for (slot, (&ci, &di)) in current.iter().zip(&dir).enumerate() {
        if di != 0.0 {
            let t = -ci / di;
            if t > 0.0 && t < 1.0 {
                candidates.push((t, Some(slot)));
            }
        }
    }

    let mut best: Option<(f64, f64, Option<usize>)> = None;
    for &(t, slot) in &candidates {
        let mut l1 = 0.0;
        for (s, (&ci, &di)) in current.iter().zip(&dir).enumerate() {
            if Some(s) == slot {
                continue; // crosses exactly to zero
            }
            l1 += (ci + t * di).abs();
        }
        let f = smooth_at(t) + prob.gamma * l1;
        if best.is_none_or(|(bf, _, _)| f < bf) {
            best = Some((f, t, slot));
        }
    }

    let (best_f, best_t, crossing) = best.unwrap();
    if best_f >= f_current {
        return Ok(None);
    }
    let taken: Vec<f64> = current
        .iter()
        .zip(&dir)
        .map(|(&c, &d)| c + best_t * d)
        .collect();
    Ok(Some((taken, crossing)))
}

/// Minimizes the L1-regularized quadratic. `init` warm-starts the iterate
/// (zeros otherwise). Non-convergence within `max_iter` sign-set steps returns
/// the best iterate with `converged: false`.
pub fn solve_l1_quadratic(
    prob: &L1QuadraticProblem,
    tol: f64,
    max_iter: usize,
    init: Option<&[f64]>,
) -> Result<(Vec<f64>, SolverReport)> {
    assert!(tol > 0.0, "tolerance must be positive");
    let k = prob.dim();
    let mut v: Vec<f64> = match init {
        Some(v0) => {
            assert_eq!(v0.len(), k, "warm start dimension mismatch");
            v0.to_vec()
        }
        None => vec![0.0; k],
    };

    // Pure quadratic: a single smooth solve over all coordinates.
    if prob.gamma == 0.0 {
        let all: Vec<usize> = (0..k).collect();
        let signs = vec![0.0; k];
        let (sol, _) = reduced_minimizer(prob, &all, &signs)?;
        let residual = l1q_kkt_residual(prob, &sol)?;
        let objective = prob.objective(&sol);
        return Ok((
            sol,
            SolverReport {
                iterations: 1,
                kkt_residual: residual,
                objective,
                converged: residual <= tol,
                objective_trace: vec![objective],
            },
        ));
    }

    let mut signs: Vec<f64> = v.iter().map(|x| if *x == 0.0 { 0.0 } else { x.signum() }).collect();
    let mut active: Vec<usize> = (0..k).filter(|&i| v[i] != 0.0).collect();
    let mut trace = vec![prob.objective(&v)];
    let mut steps = 0usize;
    let mut converged = false;

    // Gradient evaluations carry roundoff proportional to the data scale, so
    // requiring the working set to be optimal to better than that before
    // opening new coordinates would deadlock on badly scaled problems.
    let scale = prob.q.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let activation_slack = tol.max(1e-13 * scale);

    loop {
        let g = prob.smooth_grad(&v);

        let active_viol = active
            .iter()
            .map(|&i| (g[i] + prob.gamma * signs[i]).abs())
            .fold(0.0f64, f64::max);

        if active_viol <= activation_slack {
            // Optimal on the working set; look for a zero coordinate to open.
            let candidate = (0..k)
                .filter(|&i| v[i] == 0.0)
                .map(|i| (i, g[i].abs() - prob.gamma))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match candidate {
                Some((j, viol)) if viol > tol => {
                    signs[j] = -g[j].signum();
                    active.push(j);
                    active.sort_unstable();
                }
                _ if active_viol <= tol => {
                    converged = true;
                    break;
                }
                _ => {}
            }
        }

        if steps >= max_iter {
            break;
        }
        steps += 1;

        let (target, paa) = reduced_minimizer(prob, &active, &signs)?;
        let current: Vec<f64> = active.iter().map(|&i| v[i]).collect();
        let f_current = *trace.last().unwrap();
        let g_active: Vec<f64> = active.iter().map(|&i| g[i]).collect();

        let step = match sign_step(
            prob, &active, &current, &target, &paa, &g_active, f_current,
        )? {
            Some(step) => Some(step),
            None => {
                // The direct solve can return a junk direction when the
                // reduced block is near-singular; a CG solve from the current
                // iterate stays well scaled.
                let rhs: Vec<f64> = active
                    .iter()
                    .map(|&i| -(prob.q[i] + prob.gamma * signs[i]))
                    .collect();
                let (cg_target, _) = crate::linalg::cg_quadratic(&paa, &rhs, &current);
                sign_step(
                    prob, &active, &current, &cg_target, &paa, &g_active, f_current,
                )?
            }
        };
        let Some((taken, crossing)) = step else {
            // No numerical progress available from this working set.
            break;
        };

        for (s, &i) in active.iter().enumerate() {
            v[i] = if Some(s) == crossing { 0.0 } else { taken[s] };
        }
        active.retain(|&i| {
            if v[i] == 0.0 {
                signs[i] = 0.0;
                false
            } else {
                signs[i] = v[i].signum();
                true
            }
        });
        trace.push(prob.objective(&v));
    }

    let residual = l1q_kkt_residual(prob, &v)?;
    let objective = prob.objective(&v);
    Ok((
        v,
        SolverReport {
            iterations: steps,
            kkt_residual: residual,
            objective,
            converged: converged && residual <= tol,
            objective_trace: trace,
        },
    ))
}
