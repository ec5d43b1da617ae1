//! Numerical kernels: L1-regularized quadratic minimization (active-sign-set
//! search) and box-constrained concave QP maximization (projected coordinate
//! ascent), each with a KKT residual certificate.

mod boxqp;
mod l1qp;

pub use boxqp::{boxqp_kkt_residual, solve_box_qp, BoxQpProblem};
pub use l1qp::{l1q_kkt_residual, solve_l1_quadratic, L1QuadraticProblem};

use serde::{Deserialize, Serialize};

/// Default KKT tolerance for both kernels.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default iteration cap for the L1 quadratic solver (sign-set changes).
pub fn default_l1qp_max_iter(k: usize) -> usize {
    10 * k.max(1)
}

/// Default sweep cap for the box QP solver.
pub const DEFAULT_BOXQP_MAX_SWEEPS: usize = 200;

/// Outcome of a solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub converged: bool,
    /// Objective value after each iteration (descent for the minimizer,
    /// ascent for the maximizer).
    pub objective_trace: Vec<f64>,
}
