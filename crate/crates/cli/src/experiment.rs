//! Cross-validation runs, parameter sweeps, convergence traces, and timing
//! tables over immutable datasets. Fold × algorithm jobs execute on a bounded
//! worker pool; aggregation is order-independent and results are
//! deterministic for a fixed seed.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use sscl_core::baselines::{knn_predict, srbc_predict, KnnClassifier, SrbcClassifier};
use sscl_core::data::{
    accuracy, apply_standardizer, fit_standardizer, kfold, kfold_stratified, load_csv,
    one_vs_rest_tasks, Dataset, FoldSplit,
};
use sscl_core::sscl::{predict_multiclass, train, Hyperparams, SsclModel, TrainTrace};
use sscl_core::{Error, Result};

use crate::config::{Algo, ExperimentConfig};

/// Outcome of one fold × algorithm job.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub algo: Algo,
    pub accuracy: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
    /// (global point index, predicted class, true class)
    pub predictions: Vec<(usize, usize, usize)>,
}

/// Boxplot-style aggregate per algorithm.
#[derive(Debug, Clone)]
pub struct AlgoSummary {
    pub algo: Algo,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub total_train_seconds: f64,
    pub total_predict_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub fold_count: usize,
    pub split: FoldSplit,
    pub folds: Vec<FoldResult>,
    pub summaries: Vec<AlgoSummary>,
}

/// Linear interpolation between closest ranks, matching the common
/// "linear" quantile definition.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn summarize(algo: Algo, folds: &[FoldResult]) -> AlgoSummary {
    let mut accs: Vec<f64> = folds
        .iter()
        .filter(|f| f.algo == algo)
        .map(|f| f.accuracy)
        .collect();
    accs.sort_by(|a, b| a.total_cmp(b));
    AlgoSummary {
        algo,
        mean: accs.iter().sum::<f64>() / accs.len() as f64,
        median: quantile(&accs, 0.5),
        q25: quantile(&accs, 0.25),
        q75: quantile(&accs, 0.75),
        total_train_seconds: folds
            .iter()
            .filter(|f| f.algo == algo)
            .map(|f| f.train_seconds)
            .sum(),
        total_predict_seconds: folds
            .iter()
            .filter(|f| f.algo == algo)
            .map(|f| f.predict_seconds)
            .sum(),
    }
}

/// Mixes a base seed with job coordinates (splitmix64 finalizer) so parallel
/// jobs draw independent, reproducible streams.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(b.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn run_fold_job(
    ds: &Dataset,
    split: &FoldSplit,
    fold: usize,
    algo: Algo,
    hyper: &Hyperparams,
    base_seed: u64,
) -> Result<FoldResult> {
    let train_idx = split.train_indices(fold);
    let test_idx = split.test_indices(fold);

    // impute from training-fold statistics, then hand the algorithms
    // train-fold data only
    let train_raw = ds.select_rows(&train_idx);
    let fill = train_raw.observed_feature_means();
    let train_set = train_raw.with_missing_filled(&fill);
    let test_set = ds.select_rows(&test_idx).with_missing_filled(&fill);
    let truth: Vec<usize> = test_set.labels.clone();

    let (predicted, train_seconds, predict_seconds) = match algo {
        Algo::Sscl => {
            let tasks = one_vs_rest_tasks(&train_set)?;
            let t0 = Instant::now();
            let mut models: Vec<SsclModel> = Vec::with_capacity(tasks.len());
            for task in &tasks {
                let h = hyper
                    .clone()
                    .with_seed(derive_seed(base_seed, fold as u64, task.positive_class as u64));
                let (model, _) = train(task, &h)?;
                models.push(model);
            }
            let train_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let mut predicted = Vec::with_capacity(test_set.n());
            for i in 0..test_set.n() {
                predicted.push(predict_multiclass(&models, test_set.features.row(i))?);
            }
            (predicted, train_seconds, t1.elapsed().as_secs_f64())
        }
        Algo::Knn => {
            let t0 = Instant::now();
            let standardizer = fit_standardizer(&train_set);
            let train_std = apply_standardizer(&standardizer, &train_set)?;
            let classifier = KnnClassifier::new(&train_std, hyper.k)?;
            let train_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let test_std = apply_standardizer(&standardizer, &test_set)?;
            let mut predicted = Vec::with_capacity(test_set.n());
            for i in 0..test_std.n() {
                predicted.push(knn_predict(&classifier, test_std.features.row(i))?);
            }
            (predicted, train_seconds, t1.elapsed().as_secs_f64())
        }
        Algo::Srbc => {
            let t0 = Instant::now();
            let standardizer = fit_standardizer(&train_set);
            let train_std = apply_standardizer(&standardizer, &train_set)?;
            let classifier = SrbcClassifier::new(&train_std, hyper.gamma)?;
            let train_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let test_std = apply_standardizer(&standardizer, &test_set)?;
            let mut predicted = Vec::with_capacity(test_set.n());
            for i in 0..test_std.n() {
                predicted.push(srbc_predict(&classifier, test_std.features.row(i))?);
            }
            (predicted, train_seconds, t1.elapsed().as_secs_f64())
        }
    };

    let acc = accuracy(&predicted, &truth)?;
    let predictions = test_idx
        .iter()
        .zip(predicted.iter().zip(&truth))
        .map(|(&p, (&pred, &t))| (p, pred, t))
        .collect();
    Ok(FoldResult {
        fold,
        algo,
        accuracy: acc,
        train_seconds,
        predict_seconds,
        predictions,
    })
}

/// k-fold cross validation of every configured algorithm over an in-memory
/// dataset. Deterministic for a fixed seed.
pub fn run_cv_on(ds: &Dataset, config: &ExperimentConfig) -> Result<CvReport> {
    config.validate()?;
    let split = if config.stratify {
        kfold_stratified(&ds.labels, config.folds, config.seed)?
    } else {
        kfold(ds.n(), config.folds, config.seed)?
    };

    let jobs: Vec<(usize, Algo)> = (0..config.folds)
        .flat_map(|f| config.algos.iter().map(move |&a| (f, a)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidHyperparams {
            reason: format!("worker pool: {e}"),
        })?;
    let results: Result<Vec<FoldResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(fold, algo)| run_fold_job(ds, &split, fold, algo, &config.hyper, config.seed))
            .collect()
    });
    let folds = results?;

    let summaries = config
        .algos
        .iter()
        .map(|&a| summarize(a, &folds))
        .collect();
    Ok(CvReport {
        fold_count: config.folds,
        split,
        folds,
        summaries,
    })
}

/// Loads the configured dataset and cross-validates it.
pub fn run_cv(config: &ExperimentConfig) -> Result<CvReport> {
    let ds = load_csv(&config.data, &config.label_col)?;
    run_cv_on(&ds, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Beta,
    Gamma,
    K,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            "gamma" => Ok(SweepParam::Gamma),
            "k" => Ok(SweepParam::K),
            other => Err(Error::InvalidHyperparams {
                reason: format!("unknown sweep parameter {other:?} (alpha|beta|gamma|k)"),
            }),
        }
    }
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::K => "k",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub algo: Algo,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// grid values skipped because the configuration guard rejected them
    pub skipped: Vec<(f64, String)>,
}

/// Re-runs cross validation once per grid value with the parameter
/// substituted. Values that violate the convexity guard (or a k that no fold
/// can support) are skipped with a warning instead of aborting the sweep.
pub fn run_sweep(
    ds: &Dataset,
    config: &ExperimentConfig,
    param: SweepParam,
    grid: &[f64],
) -> Result<SweepOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidHyperparams {
            reason: "sweep grid is empty".into(),
        });
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &value in grid {
        let mut cfg = config.clone();
        match param {
            SweepParam::Alpha => cfg.hyper.alpha = value,
            SweepParam::Beta => cfg.hyper.beta = value,
            SweepParam::Gamma => cfg.hyper.gamma = value,
            SweepParam::K => {
                if value < 1.0 || value.fract() != 0.0 {
                    skipped.push((value, "k must be a positive integer".into()));
                    continue;
                }
                cfg.hyper.k = value as usize;
            }
        }
        if let Err(e) = cfg.hyper.validate() {
            skipped.push((value, e.to_string()));
            continue;
        }
        let min_train = ds.n() - ds.n().div_ceil(cfg.folds);
        if cfg.hyper.k + 1 > min_train {
            skipped.push((value, format!("k={} exceeds training fold size", cfg.hyper.k)));
            continue;
        }
        let report = match run_cv_on(ds, &cfg) {
            Ok(report) => report,
            // a diverging alternation at one grid point should not void the
            // rest of the sweep
            Err(e @ Error::SolverStalled { .. }) => {
                skipped.push((value, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        for summary in &report.summaries {
            let accs: Vec<f64> = report
                .folds
                .iter()
                .filter(|f| f.algo == summary.algo)
                .map(|f| f.accuracy)
                .collect();
            let mean = summary.mean;
            let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
                / (accs.len().saturating_sub(1)).max(1) as f64;
            rows.push(SweepRow {
                value,
                algo: summary.algo,
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidHyperparams {
            reason: "every grid value was skipped by the configuration guard".into(),
        });
    }
    Ok(SweepOutcome { rows, skipped })
}

/// Trains once on the full dataset (first one-vs-rest task) and returns the
/// per-iteration trace.
pub fn convergence_trace(ds: &Dataset, hyper: &Hyperparams) -> Result<TrainTrace> {
    let fill = ds.observed_feature_means();
    let filled = ds.with_missing_filled(&fill);
    let tasks = one_vs_rest_tasks(&filled)?;
    let (_, trace) = train(&tasks[0], hyper)?;
    Ok(trace)
}

/// Debug dump of the subproblems the first training point generates at
/// initialization: the canonical L1 quadratic, the box QP, and their solver
/// reports, as a JSON document.
pub fn debug_problem_dump(ds: &Dataset, hyper: &Hyperparams) -> Result<String> {
    use sscl_core::context::build_context_index;
    use sscl_core::data::{apply_standardizer, fit_standardizer};
    use sscl_core::optim::{
        default_l1qp_max_iter, solve_box_qp, solve_l1_quadratic, DEFAULT_BOXQP_MAX_SWEEPS,
        DEFAULT_TOL,
    };
    use sscl_core::sscl::{assemble_delta_qp, assemble_v_subproblem, TrainState};

    let fill = ds.observed_feature_means();
    let filled = ds.with_missing_filled(&fill);
    let tasks = one_vs_rest_tasks(&filled)?;
    let task = &tasks[0];
    let standardizer = fit_standardizer(task.dataset);
    let std_ds = apply_standardizer(&standardizer, task.dataset)?;
    let context = build_context_index(&std_ds, hyper.k)?;
    let state = TrainState::new(
        &std_ds.features,
        &task.binary_labels,
        &context,
        vec![0.5 * hyper.alpha; std_ds.n()],
    );

    let v_prob = assemble_v_subproblem(&state, hyper, 0)?;
    let (_, v_report) =
        solve_l1_quadratic(&v_prob, DEFAULT_TOL, default_l1qp_max_iter(hyper.k), None)?;
    let delta_prob = assemble_delta_qp(&state, hyper)?;
    let (_, delta_report) =
        solve_box_qp(&delta_prob, DEFAULT_TOL, DEFAULT_BOXQP_MAX_SWEEPS, None)?;

    let doc = serde_json::json!({
        "coefficient_subproblem": v_prob,
        "coefficient_report": v_report,
        "multiplier_subproblem": delta_prob,
        "multiplier_report": delta_report,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("dump serialization cannot fail"))
}

pub fn write_trace_csv<W: Write>(trace: &TrainTrace, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "iteration,dual_objective,primal_objective,mean_kkt_residual,seconds"
    )?;
    for row in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.iteration, row.dual_objective, row.primal_objective, row.mean_l1_kkt, row.seconds
        )?;
    }
    Ok(())
}

pub fn write_cv_outputs(report: &CvReport, out_dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut split_file = std::fs::File::create(out_dir.join("folds.csv"))?;
    report.split.write_csv(&mut split_file)?;

    let mut per_fold = std::fs::File::create(out_dir.join("cv_folds.csv"))?;
    writeln!(per_fold, "algo,fold,accuracy,train_seconds,predict_seconds")?;
    for f in &report.folds {
        writeln!(
            per_fold,
            "{},{},{},{},{}",
            f.algo.name(),
            f.fold,
            f.accuracy,
            f.train_seconds,
            f.predict_seconds
        )?;
    }

    let mut summary = std::fs::File::create(out_dir.join("cv_summary.csv"))?;
    writeln!(
        summary,
        "algo,mean,median,q25,q75,train_seconds,predict_seconds"
    )?;
    for s in &report.summaries {
        writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            s.algo.name(),
            s.mean,
            s.median,
            s.q25,
            s.q75,
            s.total_train_seconds,
            s.total_predict_seconds
        )?;
    }

    for algo in report.folds.iter().map(|f| f.algo).collect::<std::collections::BTreeSet<_>>() {
        let mut f = std::fs::File::create(out_dir.join(format!("predictions_{}.csv", algo.name())))?;
        writeln!(f, "point_index,fold,predicted,truth")?;
        for fr in report.folds.iter().filter(|fr| fr.algo == algo) {
            for &(point, pred, truth) in &fr.predictions {
                writeln!(f, "{},{},{},{}", point, fr.fold, pred, truth)?;
            }
        }
    }
    Ok(())
}

pub fn render_summary_table(report: &CvReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<6} {:>8} {:>8} {:>8} {:>8} {:>12} {:>12}\n",
        "algo", "mean", "median", "q25", "q75", "train_s", "predict_s"
    ));
    for s in &report.summaries {
        out.push_str(&format!(
            "{:<6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>12.3} {:>12.3}\n",
            s.algo.name(),
            s.mean,
            s.median,
            s.q25,
            s.q75,
            s.total_train_seconds,
            s.total_predict_seconds
        ));
    }
    out
}
