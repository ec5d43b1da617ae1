//! Alternation-level invariants of the learner, driven through the public
//! assembly and solver operations on randomized small states.

mod common;

use common::seeded;
use rand::RngExt;
use sscl_core::context::build_context_index;
use sscl_core::data::{one_vs_rest_tasks, Dataset};
use sscl_core::linalg::Matrix;
use sscl_core::optim::{
    boxqp_kkt_residual, default_l1qp_max_iter, l1q_kkt_residual, solve_box_qp,
    solve_l1_quadratic, DEFAULT_BOXQP_MAX_SWEEPS, DEFAULT_TOL,
};
use sscl_core::oracle::dual_objective_pairwise;
use sscl_core::sscl::{
    assemble_delta_qp, assemble_v_subproblem, dual_objective, primal_objective, recover_w, train,
    Hyperparams, TrainState,
};
use sscl_core::synth::two_clusters;

fn random_task(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2usize)).collect();
    Dataset::new(Matrix::from_rows(&rows), labels, "rand")
}

fn random_state<'a>(
    seed: u64,
    features: &'a Matrix,
    labels: &'a [f64],
    context: &'a sscl_core::context::ContextIndex,
    hyper: &Hyperparams,
) -> TrainState<'a> {
    let mut rng = seeded(seed ^ 0x5eed);
    let n = features.rows();
    let delta: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * hyper.alpha).collect();
    let mut state = TrainState::new(features, labels, context, delta);
    for i in 0..n {
        let v: Vec<f64> = (0..hyper.k)
            .map(|_| rng.random::<f64>() * 1.6 - 0.8)
            .collect();
        state.apply_v_update(i, &v);
    }
    state
}

#[test]
fn alternation_is_monotone_and_certified() {
    for trial in 0..10u64 {
        let ds = random_task(100 + trial, 14, 3);
        let binary: Vec<f64> = ds
            .labels
            .iter()
            .map(|&l| if l == 0 { 1.0 } else { -1.0 })
            .collect();
        let hyper = Hyperparams::new(1.0, 2.0, 0.3, 4).unwrap();
        let context = build_context_index(&ds, hyper.k).unwrap();
        let mut state = random_state(trial, &ds.features, &binary, &context, &hyper);

        for _outer in 0..3 {
            // step 1: every single-coefficient update must not increase the dual
            for i in 0..state.n() {
                let before = dual_objective(&state, &hyper);
                let prob = assemble_v_subproblem(&state, &hyper, i).unwrap();
                let warm = state.coeff(i).to_vec();
                let (v, rep) = solve_l1_quadratic(
                    &prob,
                    DEFAULT_TOL,
                    default_l1qp_max_iter(hyper.k),
                    Some(&warm),
                )
                .unwrap();
                assert!(rep.converged);
                state.apply_v_update(i, &v);
                let after = dual_objective(&state, &hyper);
                assert!(
                    after <= before + 1e-9,
                    "v update raised dual: {before} -> {after}"
                );
                let check = assemble_v_subproblem(&state, &hyper, i).unwrap();
                assert!(l1q_kkt_residual(&check, state.coeff(i)).unwrap() <= 1e-6);
            }
            // step 2: the multiplier update must not decrease the dual
            let before = dual_objective(&state, &hyper);
            let qp = assemble_delta_qp(&state, &hyper).unwrap();
            let warm = state.delta().to_vec();
            let (delta, rep) =
                solve_box_qp(&qp, DEFAULT_TOL, DEFAULT_BOXQP_MAX_SWEEPS, Some(&warm)).unwrap();
            assert!(rep.converged);
            state.set_delta(delta);
            let after = dual_objective(&state, &hyper);
            assert!(
                after >= before - 1e-9,
                "delta update lowered dual: {before} -> {after}"
            );
            assert!(boxqp_kkt_residual(&qp, state.delta()).unwrap() <= 1e-6);

            // weak duality of the inner problem once delta is optimal
            let w = recover_w(&state);
            let primal = primal_objective(&state, &w, &hyper);
            let dual = dual_objective(&state, &hyper);
            assert!(primal >= dual - 1e-8, "primal {primal} < dual {dual}");

            // the cache must track the coefficients exactly
            assert!(state.reconstruction_drift() <= 1e-10);
        }
    }
}

#[test]
fn cached_dual_matches_pairwise_double_sum() {
    for trial in 0..20u64 {
        let ds = random_task(500 + trial, 10, 3);
        let binary: Vec<f64> = ds
            .labels
            .iter()
            .map(|&l| if l == 0 { 1.0 } else { -1.0 })
            .collect();
        let hyper = Hyperparams::new(1.1, 3.0, 0.2, 3).unwrap();
        let context = build_context_index(&ds, hyper.k).unwrap();
        let state = random_state(trial, &ds.features, &binary, &context, &hyper);
        let a = dual_objective(&state, &hyper);
        let b = dual_objective_pairwise(&state, &hyper);
        assert!(
            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            "single-sum {a} vs double-sum {b}"
        );
    }
}

#[test]
fn assembled_gradient_matches_finite_differences() {
    let h = 1e-5;
    for trial in 0..12u64 {
        let ds = random_task(900 + trial, 9, 3);
        let binary: Vec<f64> = ds
            .labels
            .iter()
            .map(|&l| if l == 0 { 1.0 } else { -1.0 })
            .collect();
        let hyper = Hyperparams::new(1.0, 2.5, 0.4, 3).unwrap();
        let context = build_context_index(&ds, hyper.k).unwrap();
        let mut rng = seeded(trial ^ 0xfd);
        let n = ds.n();
        let delta: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * hyper.alpha).collect();
        let mut state = TrainState::new(&ds.features, &binary, &context, delta);
        for i in 0..n {
            // entries away from zero keep the L1 term differentiable
            let v: Vec<f64> = (0..hyper.k)
                .map(|_| {
                    let mag = 0.2 + rng.random::<f64>();
                    if rng.random::<f64>() < 0.5 {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            state.apply_v_update(i, &v);
        }

        let i = (trial as usize) % n;
        let prob = assemble_v_subproblem(&state, &hyper, i).unwrap();
        let v_i = state.coeff(i).to_vec();
        let analytic: Vec<f64> = {
            let pv = prob.p.matvec(&v_i);
            (0..hyper.k)
                .map(|j| pv[j] + prob.q[j] + prob.gamma * v_i[j].signum())
                .collect()
        };
        for j in 0..hyper.k {
            let mut plus = v_i.clone();
            plus[j] += h;
            let mut minus = v_i.clone();
            minus[j] -= h;
            let mut s_plus = state.clone();
            s_plus.apply_v_update(i, &plus);
            let mut s_minus = state.clone();
            s_minus.apply_v_update(i, &minus);
            let fd = (dual_objective_pairwise(&s_plus, &hyper)
                - dual_objective_pairwise(&s_minus, &hyper))
                / (2.0 * h);
            let scale = analytic[j].abs().max(1.0);
            assert!(
                (fd - analytic[j]).abs() <= 1e-5 * scale,
                "coordinate {j}: fd {fd} vs analytic {}",
                analytic[j]
            );
        }
    }
}

#[test]
fn trained_model_satisfies_multiplier_expansion() {
    let ds = two_clusters(20, (&[0.0, 0.0], &[6.0, 6.0]), 1.0, 17);
    let tasks = one_vs_rest_tasks(&ds).unwrap();
    let hyper = Hyperparams::new(1.0, 10.0, 0.3, 5).unwrap().with_seed(2);
    let (model, trace) = train(&tasks[0], &hyper).unwrap();

    // w = Σ δᵢyᵢXᵢvᵢ recomputed from the stored pieces
    let std_feats = &model.train_features;
    let context = build_context_index(
        &Dataset::new(std_feats.clone(), vec![0; std_feats.rows()], "chk"),
        hyper.k,
    )
    .unwrap();
    let mut w = vec![0.0; std_feats.cols()];
    for i in 0..std_feats.rows() {
        let mut r = vec![0.0; std_feats.cols()];
        for (j, &id) in context.neighbors(i).iter().enumerate() {
            let c = model.coeffs.row(i)[j];
            for (rv, xv) in r.iter_mut().zip(std_feats.row(id)) {
                *rv += c * xv;
            }
        }
        let c = model.delta[i] * model.train_binary_labels[i];
        for (wv, rv) in w.iter_mut().zip(&r) {
            *wv += c * rv;
        }
    }
    for (a, b) in w.iter().zip(&model.w) {
        assert!((a - b).abs() <= 1e-8, "stored w diverges: {a} vs {b}");
    }

    // multipliers stay in the box, trace stays bounded by the iteration cap
    assert!(model.delta.iter().all(|&d| (0.0..=hyper.alpha).contains(&d)));
    assert!(trace.rows.len() <= hyper.max_outer_iter);
}
