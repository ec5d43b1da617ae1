//! The supervised sparse context learner.
//!
//! Each training point is reconstructed as a sparse combination of its k
//! nearest neighbors while a linear classifier is fit on the reconstructions.
//! Both are learned jointly through the dual of the hinge-loss problem: the
//! multipliers δ live in the box [0, α], and training alternates between
//! per-point L1-regularized coefficient updates (Gauss-Seidel, ascending
//! index) and one box-QP pass over δ. At test time a class-conditional
//! coefficient vector is solved per candidate label and the label with the
//! smaller score wins.

use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::{build_context_index, query_rows, ContextIndex};
use crate::data::{apply_standardizer, fit_standardizer, BinaryTask, Standardizer};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq, Matrix};
use crate::optim::{
    default_l1qp_max_iter, solve_box_qp, solve_l1_quadratic, BoxQpProblem, L1QuadraticProblem,
    DEFAULT_BOXQP_MAX_SWEEPS, DEFAULT_TOL,
};

/// Ridge added to every assembled quadratic coefficient matrix. The neighbor
/// Gram matrix is singular whenever k exceeds the rank of the context, so the
/// reduced systems need a floor.
pub const ASSEMBLY_RIDGE: f64 = 1e-8;

/// Trade-off weights and loop controls.
///
/// The convexity guard `alpha² < 2·beta` is enforced at construction: the
/// per-point quadratic coefficient is `(2β − δᵢ²)·XᵢᵀXᵢ` with `δᵢ ≤ α`, so
/// configurations outside the guard make the coefficient subproblem unbounded
/// below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: usize,
    pub max_outer_iter: usize,
    pub outer_tol: f64,
    pub seed: u64,
}

impl Hyperparams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, k: usize) -> Result<Self> {
        let h = Hyperparams {
            alpha,
            beta,
            gamma,
            k,
            max_outer_iter: 100,
            outer_tol: 1e-6,
            seed: 0,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn with_iterations(mut self, max_outer_iter: usize) -> Self {
        self.max_outer_iter = max_outer_iter;
        self
    }

    pub fn with_outer_tol(mut self, outer_tol: f64) -> Self {
        self.outer_tol = outer_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidHyperparams { reason });
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return fail(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return fail(format!("beta must be > 0, got {}", self.beta));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return fail(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if self.k < 1 {
            return fail("k must be >= 1".into());
        }
        if self.max_outer_iter < 1 {
            return fail("max_outer_iter must be >= 1".into());
        }
        if !self.outer_tol.is_finite() || self.outer_tol < 0.0 {
            return fail(format!("outer_tol must be >= 0, got {}", self.outer_tol));
        }
        if self.alpha * self.alpha >= 2.0 * self.beta {
            return fail(format!(
                "alpha^2 must be < 2*beta for the coefficient subproblems to stay convex \
                 (alpha = {}, beta = {})",
                self.alpha, self.beta
            ));
        }
        Ok(())
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 1.0,
            beta: 10.0,
            gamma: 1.0,
            k: 5,
            max_outer_iter: 100,
            outer_tol: 1e-6,
            seed: 0,
        }
    }
}

/// Mutable training state: coefficients, multipliers, and the caches that keep
/// per-point updates cheap. The reconstruction cache row i always equals
/// `Xᵢ vᵢ` for the current coefficients.
#[derive(Debug, Clone)]
pub struct TrainState<'a> {
    features: &'a Matrix,
    labels: &'a [f64],
    context: &'a ContextIndex,
    /// Row i holds vᵢ (the paper's k×n matrix V, stored transposed).
    coeffs: Matrix,
    delta: Vec<f64>,
    /// Row i holds the reconstruction Xᵢvᵢ.
    reconstructions: Matrix,
    /// Cached Σᵢ δᵢ yᵢ Xᵢvᵢ, maintained incrementally across v updates.
    w_full: Vec<f64>,
    /// Per-point neighbor Gram matrices XᵢᵀXᵢ (fixed once the context is).
    grams: Vec<Matrix>,
    /// Per-point Xᵢᵀxᵢ (fixed).
    xtx: Vec<Vec<f64>>,
}

impl<'a> TrainState<'a> {
    pub fn new(
        features: &'a Matrix,
        labels: &'a [f64],
        context: &'a ContextIndex,
        delta: Vec<f64>,
    ) -> Self {
        let n = features.rows();
        let d = features.cols();
        let k = context.k;
        assert_eq!(labels.len(), n);
        assert_eq!(context.n(), n);
        assert_eq!(delta.len(), n);

        let mut grams = Vec::with_capacity(n);
        let mut xtx = Vec::with_capacity(n);
        for i in 0..n {
            let ids = context.neighbors(i);
            let mut g = Matrix::zeros(k, k);
            for a in 0..k {
                let ra = features.row(ids[a]);
                for b in a..k {
                    let v = dot(ra, features.row(ids[b]));
                    g[(a, b)] = v;
                    g[(b, a)] = v;
                }
            }
            grams.push(g);
            let xi = features.row(i);
            xtx.push(ids.iter().map(|&id| dot(features.row(id), xi)).collect());
        }

        TrainState {
            features,
            labels,
            context,
            coeffs: Matrix::zeros(n, k),
            delta,
            reconstructions: Matrix::zeros(n, d),
            w_full: vec![0.0; d],
            grams,
            xtx,
        }
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn k(&self) -> usize {
        self.context.k
    }

    pub fn features(&self) -> &Matrix {
        self.features
    }

    pub fn labels(&self) -> &[f64] {
        self.labels
    }

    pub fn context(&self) -> &ContextIndex {
        self.context
    }

    pub fn coeff(&self, i: usize) -> &[f64] {
        self.coeffs.row(i)
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn reconstruction(&self, i: usize) -> &[f64] {
        self.reconstructions.row(i)
    }

    /// Classifier vector implied by the current state, excluding point i's own
    /// contribution (the `w₋ᵢ` of the coefficient subproblem).
    pub fn w_minus(&self, i: usize) -> Vec<f64> {
        let mut w = self.w_full.clone();
        axpy(
            -self.delta[i] * self.labels[i],
            self.reconstructions.row(i),
            &mut w,
        );
        w
    }

    /// Replaces vᵢ, refreshing the reconstruction row and the w cache.
    pub fn apply_v_update(&mut self, i: usize, v_new: &[f64]) {
        assert_eq!(v_new.len(), self.k());
        let d = self.dim();
        let mut r_new = vec![0.0; d];
        for (j, &id) in self.context.neighbors(i).iter().enumerate() {
            if v_new[j] != 0.0 {
                axpy(v_new[j], self.features.row(id), &mut r_new);
            }
        }
        let scale = self.delta[i] * self.labels[i];
        let r_old = self.reconstructions.row(i);
        for ((w, rn), ro) in self.w_full.iter_mut().zip(&r_new).zip(r_old) {
            *w += scale * (rn - ro);
        }
        self.coeffs.row_mut(i).copy_from_slice(v_new);
        self.reconstructions.row_mut(i).copy_from_slice(&r_new);
    }

    /// Replaces the multipliers and rebuilds the w cache from scratch.
    pub fn set_delta(&mut self, delta: Vec<f64>) {
        assert_eq!(delta.len(), self.n());
        self.delta = delta;
        self.w_full = recover_w(self);
    }

    /// Largest deviation between the reconstruction cache and a fresh
    /// recomputation; test support.
    pub fn reconstruction_drift(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            let mut fresh = vec![0.0; self.dim()];
            for (j, &id) in self.context.neighbors(i).iter().enumerate() {
                axpy(self.coeffs.row(i)[j], self.features.row(id), &mut fresh);
            }
            for (a, b) in fresh.iter().zip(self.reconstructions.row(i)) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

/// Canonical form of the coefficient subproblem for point i with every other
/// coefficient vector fixed:
/// `P = (2β − δᵢ²)·XᵢᵀXᵢ + ridge·I`, `q = −δᵢyᵢ·Xᵢᵀw₋ᵢ − 2β·Xᵢᵀxᵢ`.
pub fn assemble_v_subproblem(
    state: &TrainState<'_>,
    hyper: &Hyperparams,
    i: usize,
) -> Result<L1QuadraticProblem> {
    let k = state.k();
    let coeff = 2.0 * hyper.beta - state.delta[i] * state.delta[i];
    assert!(
        coeff > 0.0,
        "convexity guard violated: 2*beta - delta_i^2 = {coeff}"
    );

    let mut p = Matrix::zeros(k, k);
    let gram = &state.grams[i];
    for a in 0..k {
        for b in 0..k {
            p[(a, b)] = coeff * gram[(a, b)];
        }
        p[(a, a)] += ASSEMBLY_RIDGE;
    }

    let w_minus = state.w_minus(i);
    let dy = state.delta[i] * state.labels[i];
    let q: Vec<f64> = state
        .context
        .neighbors(i)
        .iter()
        .zip(&state.xtx[i])
        .map(|(&id, &xtxi)| {
            -dy * dot(state.features.row(id), &w_minus) - 2.0 * hyper.beta * xtxi
        })
        .collect();

    L1QuadraticProblem::new(p, q, hyper.gamma)
}

/// Gram matrix of the label-signed reconstructions:
/// `M_{ij} = yᵢyⱼ·(Xᵢvᵢ)ᵀ(Xⱼvⱼ)`, boxed by α.
pub fn assemble_delta_qp(state: &TrainState<'_>, hyper: &Hyperparams) -> Result<BoxQpProblem> {
    let n = state.n();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let ri = state.reconstructions.row(i);
        let yi = state.labels[i];
        for j in i..n {
            let v = yi * state.labels[j] * dot(ri, state.reconstructions.row(j));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    BoxQpProblem::new(m, hyper.alpha)
}

/// `w = Σᵢ δᵢ yᵢ Xᵢvᵢ`, recomputed from scratch.
pub fn recover_w(state: &TrainState<'_>) -> Vec<f64> {
    let mut w = vec![0.0; state.dim()];
    for i in 0..state.n() {
        let c = state.delta[i] * state.labels[i];
        if c != 0.0 {
            axpy(c, state.reconstructions.row(i), &mut w);
        }
    }
    w
}

/// Value of the dual objective at the current state:
/// `−½‖Σδᵢyᵢ Xᵢvᵢ‖² + βΣ‖xᵢ − Xᵢvᵢ‖² + γΣ‖vᵢ‖₁ + Σδᵢ`.
pub fn dual_objective(state: &TrainState<'_>, hyper: &Hyperparams) -> f64 {
    let w = recover_w(state);
    let mut recon_err = 0.0;
    let mut l1 = 0.0;
    for i in 0..state.n() {
        let xi = state.features.row(i);
        let ri = state.reconstructions.row(i);
        recon_err += xi.iter().zip(ri).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        l1 += state.coeffs.row(i).iter().map(|v| v.abs()).sum::<f64>();
    }
    -0.5 * norm_sq(&w) + hyper.beta * recon_err + hyper.gamma * l1 + state.delta.iter().sum::<f64>()
}

/// Value of the primal objective with the slack at its optimum (the hinge):
/// `½‖w‖² + αΣ max(0, 1 − yᵢwᵀXᵢvᵢ) + βΣ‖xᵢ − Xᵢvᵢ‖² + γΣ‖vᵢ‖₁`.
pub fn primal_objective(state: &TrainState<'_>, w: &[f64], hyper: &Hyperparams) -> f64 {
    assert_eq!(w.len(), state.dim());
    let mut hinge = 0.0;
    let mut recon_err = 0.0;
    let mut l1 = 0.0;
    for i in 0..state.n() {
        let xi = state.features.row(i);
        let ri = state.reconstructions.row(i);
        hinge += (1.0 - state.labels[i] * dot(w, ri)).max(0.0);
        recon_err += xi.iter().zip(ri).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        l1 += state.coeffs.row(i).iter().map(|v| v.abs()).sum::<f64>();
    }
    0.5 * norm_sq(w) + hyper.alpha * hinge + hyper.beta * recon_err + hyper.gamma * l1
}

/// One row of the per-iteration training trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub mean_l1_kkt: f64,
    pub box_kkt: f64,
    pub seconds: f64,
}

/// Per-iteration objective values and solver diagnostics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
}

/// A trained model: classifier vector, coefficients, multipliers, and the
/// standardized training matrix retained for test-time context lookup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsclModel {
    pub w: Vec<f64>,
    /// Row i holds vᵢ.
    pub coeffs: Matrix,
    pub delta: Vec<f64>,
    pub hyper: Hyperparams,
    pub train_features: Matrix,
    pub train_binary_labels: Vec<f64>,
    pub standardizer: Standardizer,
    pub positive_class: usize,
    pub negative_class: Option<usize>,
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    format_version: u32,
    model: SsclModel,
}

impl SsclModel {
    /// Versioned JSON artifact; numbers round-trip bit-exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelArtifact {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: ModelArtifact = serde_json::from_str(text)?;
        if artifact.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedModelVersion {
                found: artifact.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        Ok(artifact.model)
    }
}

/// Trains the learner on a binary task (raw features; standardization is
/// fitted internally and retained in the model).
///
/// Follows the alternating dual scheme: δ⁰ uniform on [0, α] from the seed,
/// V⁰ = 0, then per outer iteration a Gauss-Seidel pass over the coefficient
/// subproblems (each warm-started from the current vᵢ) followed by one box-QP
/// solve for δ (warm-started from the current δ). Stops early when the
/// relative dual-objective change drops below `outer_tol`.
pub fn train(task: &BinaryTask<'_>, hyper: &Hyperparams) -> Result<(SsclModel, TrainTrace)> {
    hyper.validate()?;
    if !task.has_both_labels() {
        return Err(Error::SingleClass { found: 1 });
    }

    let standardizer = fit_standardizer(task.dataset);
    let std_ds = apply_standardizer(&standardizer, task.dataset)?;
    let context = build_context_index(&std_ds, hyper.k)?;

    let n = std_ds.n();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let delta0: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * hyper.alpha).collect();

    let mut state = TrainState::new(&std_ds.features, &task.binary_labels, &context, delta0);
    let mut trace = TrainTrace::default();
    let mut prev_dual: Option<f64> = None;

    let l1_max_iter = default_l1qp_max_iter(hyper.k);
    // Warm-started solves are monotone, so an iterate that stopped at its
    // numeric floor cannot hurt the alternation; a solve only counts as
    // failed when its residual is large relative to the problem magnitude.
    let acceptable = |residual: f64, scale: f64| residual <= (1e-6 * scale).max(DEFAULT_TOL);

    for t in 1..=hyper.max_outer_iter {
        let started = Instant::now();

        let mut kkt_sum = 0.0;
        for i in 0..n {
            let prob = assemble_v_subproblem(&state, hyper, i)?;
            let warm: Vec<f64> = state.coeff(i).to_vec();
            let (v_new, report) =
                solve_l1_quadratic(&prob, DEFAULT_TOL, l1_max_iter, Some(&warm))?;
            let scale = prob.q.iter().fold(1.0f64, |m, x| m.max(x.abs())).max(
                v_new.iter().fold(0.0f64, |m, x| m.max(x.abs()))
                    * prob.p.data().iter().fold(0.0f64, |m, x| m.max(x.abs())),
            );
            if !report.converged && !acceptable(report.kkt_residual, scale) {
                return Err(Error::SolverStalled {
                    stage: "coefficient update",
                    outer: t,
                    point: Some(i),
                    iterations: report.iterations,
                    residual: report.kkt_residual,
                });
            }
            state.apply_v_update(i, &v_new);
            kkt_sum += report.kkt_residual;
        }

        let qp = assemble_delta_qp(&state, hyper)?;
        let warm_delta = state.delta().to_vec();
        let (delta_new, box_report) = solve_box_qp(
            &qp,
            DEFAULT_TOL,
            DEFAULT_BOXQP_MAX_SWEEPS,
            Some(&warm_delta),
        )?;
        let m_scale = qp
            .m
            .data()
            .iter()
            .fold(1.0f64, |m, x| m.max(x.abs() * hyper.alpha * (n as f64)));
        if !box_report.converged && !acceptable(box_report.kkt_residual, m_scale) {
            return Err(Error::SolverStalled {
                stage: "multiplier update",
                outer: t,
                point: None,
                iterations: box_report.iterations,
                residual: box_report.kkt_residual,
            });
        }
        state.set_delta(delta_new);

        let dual = dual_objective(&state, hyper);
        if !dual.is_finite() {
            return Err(Error::SolverStalled {
                stage: "alternation diverged (dual objective not finite)",
                outer: t,
                point: None,
                iterations: t,
                residual: f64::INFINITY,
            });
        }
        let w = recover_w(&state);
        let primal = primal_objective(&state, &w, hyper);
        trace.rows.push(TraceRow {
            iteration: t,
            dual_objective: dual,
            primal_objective: primal,
            mean_l1_kkt: kkt_sum / n as f64,
            box_kkt: box_report.kkt_residual,
            seconds: started.elapsed().as_secs_f64(),
        });

        if let Some(prev) = prev_dual {
            if (dual - prev).abs() / prev.abs().max(1.0) < hyper.outer_tol {
                break;
            }
        }
        prev_dual = Some(dual);
    }

    let model = SsclModel {
        w: recover_w(&state),
        coeffs: state.coeffs.clone(),
        delta: state.delta().to_vec(),
        hyper: hyper.clone(),
        train_features: std_ds.features.clone(),
        train_binary_labels: task.binary_labels.clone(),
        standardizer,
        positive_class: task.positive_class,
        negative_class: task.negative_class,
    };
    Ok((model, trace))
}

fn conditional_from_context(
    model: &SsclModel,
    context_rows: &Matrix,
    x_std: &[f64],
    y: f64,
) -> Result<Vec<f64>> {
    let k = context_rows.rows();
    let beta = model.hyper.beta;
    let mut p = Matrix::zeros(k, k);
    for a in 0..k {
        let ra = context_rows.row(a);
        for b in a..k {
            let v = 2.0 * beta * dot(ra, context_rows.row(b));
            p[(a, b)] = v;
            p[(b, a)] = v;
        }
        p[(a, a)] += ASSEMBLY_RIDGE;
    }
    let q: Vec<f64> = (0..k)
        .map(|j| {
            let row = context_rows.row(j);
            -y * dot(row, &model.w) - 2.0 * beta * dot(row, x_std)
        })
        .collect();
    let prob = L1QuadraticProblem::new(p, q, model.hyper.gamma)?;
    let (v, _) = solve_l1_quadratic(
        &prob,
        DEFAULT_TOL,
        default_l1qp_max_iter(model.hyper.k),
        None,
    )?;
    Ok(v)
}

/// Class-conditional reconstruction coefficients of a raw query under
/// candidate label y: `argmin −y·wᵀ(Xv) + β‖x − Xv‖² + γ‖v‖₁` over the
/// query's k nearest training neighbors.
pub fn conditional_coeffs(model: &SsclModel, x: &[f64], y: f64) -> Result<Vec<f64>> {
    let x_std = model.standardizer.transform_row(x)?;
    let (_, context_rows) = query_rows(&model.train_features, &x_std, model.hyper.k)?;
    conditional_from_context(model, &context_rows, &x_std, y)
}

/// Predicted binary label and score for a raw query. The score is
/// `s(−1) − s(+1)` where `s(y) = −y·wᵀ(Xv^y)`; positive favors +1. Ties within
/// 1e-12 go to +1.
pub fn predict(model: &SsclModel, x: &[f64]) -> Result<(f64, f64)> {
    let x_std = model.standardizer.transform_row(x)?;
    let (_, context_rows) = query_rows(&model.train_features, &x_std, model.hyper.k)?;
    let mut scores = [0.0f64; 2];
    for (slot, y) in [(0usize, 1.0f64), (1usize, -1.0f64)] {
        let v = conditional_from_context(model, &context_rows, &x_std, y)?;
        let mut wxv = 0.0;
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                wxv += vj * dot(context_rows.row(j), &model.w);
            }
        }
        scores[slot] = -y * wxv;
    }
    let (s_pos, s_neg) = (scores[0], scores[1]);
    let score = s_neg - s_pos;
    let label = if (s_pos - s_neg).abs() <= 1e-12 || s_pos < s_neg {
        1.0
    } else {
        -1.0
    };
    Ok((label, score))
}

/// One-vs-rest reduction: the class whose model scores highest wins, ties
/// toward the lower class id (models must be ordered by ascending class id).
/// A single model is treated as a plain binary classifier.
pub fn predict_multiclass(models: &[SsclModel], x: &[f64]) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::EmptyModelList);
    }
    if models.len() == 1 {
        let (label, _) = predict(&models[0], x)?;
        return if label > 0.0 {
            Ok(models[0].positive_class)
        } else {
            models[0].negative_class.ok_or(Error::MissingNegativeClass)
        };
    }
    let mut best: Option<(f64, usize)> = None;
    for m in models {
        let (_, score) = predict(m, x)?;
        if best.is_none_or(|(bs, _)| score > bs) {
            best = Some((score, m.positive_class));
        }
    }
    Ok(best.unwrap().1)
}
