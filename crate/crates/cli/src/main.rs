use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use sscl_cli::bundle::{load_query_matrix, ModelBundle};
use sscl_cli::config::{
    apply_file_entries, parse_label_col, read_config_file, Algo, ExperimentConfig,
};
use sscl_cli::experiment::{
    convergence_trace, render_summary_table, run_cv_on, run_sweep, write_cv_outputs,
    write_trace_csv, SweepParam,
};
use sscl_core::data::load_csv;
use sscl_core::Error;

#[derive(Parser)]
#[command(
    name = "sscl",
    version,
    about = "Sparse context reconstruction classifier: cross-validation, sweeps, and inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Dataset CSV (features plus one label column)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column index or header name
    #[arg(long)]
    label_col: Option<String>,
    /// Comma-separated algorithms: sscl,knn,srbc
    #[arg(long)]
    algos: Option<String>,
    /// Hinge-loss weight
    #[arg(long)]
    alpha: Option<f64>,
    /// Reconstruction weight
    #[arg(long)]
    beta: Option<f64>,
    /// Sparsity weight
    #[arg(long)]
    gamma: Option<f64>,
    /// Neighbor context size
    #[arg(long)]
    k: Option<usize>,
    /// Maximum outer iterations
    #[arg(long)]
    iters: Option<usize>,
    /// Relative dual-objective early-stop threshold
    #[arg(long)]
    tol: Option<f64>,
    /// Cross-validation fold count
    #[arg(long)]
    folds: Option<usize>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to $SSCL_OUT_DIR or ./sscl_out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker pool size (0 = number of cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Stratified fold assignment
    #[arg(long, action = ArgAction::SetTrue)]
    stratify: bool,
    /// key=value config file; flags override file entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// More progress output (repeatable)
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// k-fold cross validation of the configured algorithms
    Cv(CommonArgs),
    /// Parameter sensitivity sweep (re-runs cv per grid value)
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter to sweep: alpha | beta | gamma | k
        #[arg(long)]
        param: String,
        /// Comma-separated grid values (defaults per parameter)
        #[arg(long)]
        grid: Option<String>,
    },
    /// Train once and emit the per-iteration convergence trace
    Converge(CommonArgs),
    /// Cross-validation timing table
    Bench(CommonArgs),
    /// Train on the full dataset and save a model artifact
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Where to write the model JSON
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Classify a CSV of query rows with a saved model artifact
    Predict {
        /// Model JSON produced by `sscl train`
        #[arg(long)]
        model: PathBuf,
        /// CSV of feature rows (no label column)
        #[arg(long)]
        queries: PathBuf,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let entries = read_config_file(path)?;
        apply_file_entries(&mut cfg, &entries)?;
    }
    if let Some(data) = &args.data {
        cfg.data = data.clone();
    }
    if let Some(lc) = &args.label_col {
        cfg.label_col = parse_label_col(lc);
    }
    if let Some(algos) = &args.algos {
        cfg.algos = algos
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Algo>, _>>()?;
    }
    if let Some(v) = args.alpha {
        cfg.hyper.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.hyper.beta = v;
    }
    if let Some(v) = args.gamma {
        cfg.hyper.gamma = v;
    }
    if let Some(v) = args.k {
        cfg.hyper.k = v;
    }
    if let Some(v) = args.iters {
        cfg.hyper.max_outer_iter = v;
    }
    if let Some(v) = args.tol {
        cfg.hyper.outer_tol = v;
    }
    if let Some(v) = args.folds {
        cfg.folds = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
        cfg.hyper.seed = v;
    }
    if let Some(v) = &args.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    if args.stratify {
        cfg.stratify = true;
    }
    cfg.verbosity = args.verbose;
    if cfg.data.as_os_str().is_empty() {
        return Err(Error::InvalidHyperparams {
            reason: "--data is required (or `data=` in the config file)".into(),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_cv(args: &CommonArgs) -> Result<(), Error> {
    let cfg = build_config(args)?;
    let ds = load_csv(&cfg.data, &cfg.label_col)?;
    let report = run_cv_on(&ds, &cfg)?;
    write_cv_outputs(&report, &cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    if cfg.verbosity > 0 {
        for f in &report.folds {
            eprintln!(
                "fold {} {}: accuracy {:.4} (train {:.3}s, predict {:.3}s)",
                f.fold,
                f.algo.name(),
                f.accuracy,
                f.train_seconds,
                f.predict_seconds
            );
        }
    }
    print!("{}", render_summary_table(&report));
    println!("outputs written to {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_sweep(args: &CommonArgs, param: &str, grid: Option<&str>) -> Result<(), Error> {
    let cfg = build_config(args)?;
    let param: SweepParam = param.parse()?;
    let grid: Vec<f64> = match grid {
        Some(grid) => grid
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::InvalidHyperparams {
                    reason: format!("grid value {s:?} is not a number"),
                })
            })
            .collect::<Result<_, _>>()?,
        None => match param {
            SweepParam::Alpha => vec![0.1, 1.0, 10.0, 100.0],
            SweepParam::Beta => vec![1.0, 10.0, 100.0],
            SweepParam::Gamma => vec![0.01, 0.1, 1.0, 10.0],
            SweepParam::K => vec![1.0, 2.0, 5.0, 10.0, 20.0],
        },
    };
    let ds = load_csv(&cfg.data, &cfg.label_col)?;
    let outcome = run_sweep(&ds, &cfg, param, &grid)?;
    for (value, reason) in &outcome.skipped {
        eprintln!("warning: skipped {}={}: {}", param.name(), value, reason);
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let path = cfg.out_dir.join(format!("sweep_{}.csv", param.name()));
    let mut f = std::fs::File::create(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    writeln!(f, "value,algo,mean_accuracy,std_accuracy").map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    println!(
        "{:>10} {:<6} {:>10} {:>10}",
        param.name(),
        "algo",
        "mean",
        "std"
    );
    for row in &outcome.rows {
        writeln!(
            f,
            "{},{},{},{}",
            row.value,
            row.algo.name(),
            row.mean_accuracy,
            row.std_accuracy
        )
        .map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        println!(
            "{:>10} {:<6} {:>10.4} {:>10.4}",
            row.value,
            row.algo.name(),
            row.mean_accuracy,
            row.std_accuracy
        );
    }
    println!("sweep written to {}", path.display());
    Ok(())
}

fn cmd_converge(args: &CommonArgs) -> Result<(), Error> {
    let cfg = build_config(args)?;
    let ds = load_csv(&cfg.data, &cfg.label_col)?;
    let trace = convergence_trace(&ds, &cfg.hyper)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let path = cfg.out_dir.join("convergence.csv");
    let f = std::fs::File::create(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    write_trace_csv(&trace, f).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    if cfg.verbosity >= 2 {
        let dump = sscl_cli::experiment::debug_problem_dump(&ds, &cfg.hyper)?;
        let dump_path = cfg.out_dir.join("debug_problems.json");
        std::fs::write(&dump_path, dump).map_err(|source| Error::Io {
            path: dump_path.clone(),
            source,
        })?;
        eprintln!("solver problem dump written to {}", dump_path.display());
    }
    let non_monotone: Vec<usize> = trace
        .rows
        .windows(2)
        .filter(|w| w[1].dual_objective > w[0].dual_objective)
        .map(|w| w[1].iteration)
        .collect();
    if !non_monotone.is_empty() {
        eprintln!(
            "note: dual objective rose at iterations {:?} (expected for a max-min alternation)",
            non_monotone
        );
    }
    let last = trace.rows.last().expect("at least one iteration");
    println!(
        "{} iterations, final dual {:.6e}, final primal {:.6e}",
        trace.rows.len(),
        last.dual_objective,
        last.primal_objective
    );
    println!("trace written to {}", path.display());
    Ok(())
}

fn cmd_bench(args: &CommonArgs) -> Result<(), Error> {
    let cfg = build_config(args)?;
    let ds = load_csv(&cfg.data, &cfg.label_col)?;
    let report = run_cv_on(&ds, &cfg)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let path = cfg.out_dir.join("bench.csv");
    let mut f = std::fs::File::create(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    writeln!(f, "algo,train_seconds,predict_seconds,total_seconds,mean_accuracy").map_err(
        |source| Error::Io {
            path: path.clone(),
            source,
        },
    )?;
    println!(
        "{:<6} {:>12} {:>12} {:>12} {:>10}",
        "algo", "train_s", "predict_s", "total_s", "accuracy"
    );
    for s in &report.summaries {
        let total = s.total_train_seconds + s.total_predict_seconds;
        writeln!(
            f,
            "{},{},{},{},{}",
            s.algo.name(),
            s.total_train_seconds,
            s.total_predict_seconds,
            total,
            s.mean
        )
        .map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        println!(
            "{:<6} {:>12.3} {:>12.3} {:>12.3} {:>10.4}",
            s.algo.name(),
            s.total_train_seconds,
            s.total_predict_seconds,
            total,
            s.mean
        );
    }
    println!("timings written to {}", path.display());
    Ok(())
}

fn cmd_train(args: &CommonArgs, model_out: &Path) -> Result<(), Error> {
    let cfg = build_config(args)?;
    let ds = load_csv(&cfg.data, &cfg.label_col)?;
    let mut hyper = cfg.hyper.clone();
    hyper.seed = cfg.seed;
    let bundle = ModelBundle::fit(&ds, &hyper)?;
    bundle.save(model_out)?;
    println!(
        "trained {} model(s) over {} classes; saved to {}",
        bundle.models.len(),
        bundle.label_names.len(),
        model_out.display()
    );
    Ok(())
}

fn cmd_predict(model: &Path, queries: &Path, out: Option<&Path>) -> Result<(), Error> {
    let bundle = ModelBundle::load(model)?;
    let q = load_query_matrix(queries)?;
    let mut lines = String::from("query_index,predicted_class,predicted_label,score\n");
    for i in 0..q.rows() {
        let (class, score) = bundle.predict(q.row(i))?;
        lines.push_str(&format!(
            "{},{},{},{}\n",
            i,
            class,
            bundle.label_name(class),
            score
        ));
    }
    match out {
        Some(path) => std::fs::write(path, lines).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => print!("{lines}"),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidHyperparams { .. }
        | Error::FoldCountOutOfRange { .. }
        | Error::KOutOfRange { .. }
        | Error::LabelColumnNotFound { .. }
        | Error::LabelColumnOutOfRange { .. }
        | Error::UnsupportedModelVersion { .. } => 1,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::RaggedRow { .. }
        | Error::EmptyFile { .. }
        | Error::DimensionMismatch { .. }
        | Error::SingleClass { .. }
        | Error::LengthMismatch { .. }
        | Error::ModelDecode(_)
        | Error::EmptyModelList
        | Error::MissingNegativeClass => 2,
        Error::SolverStalled { .. }
        | Error::Indefinite { .. }
        | Error::NotSymmetric { .. }
        | Error::OutsideBox { .. } => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Cv(args) => cmd_cv(args),
        Command::Sweep { common, param, grid } => cmd_sweep(common, param, grid.as_deref()),
        Command::Converge(args) => cmd_converge(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Train { common, model_out } => cmd_train(common, model_out),
        Command::Predict { model, queries, out } => cmd_predict(model, queries, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
