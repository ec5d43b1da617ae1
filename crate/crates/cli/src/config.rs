//! Experiment configuration: defaults, key=value config files, environment,
//! and command-line overrides (flags win over file values, file over
//! environment, environment over defaults).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use sscl_core::data::LabelColumn;
use sscl_core::sscl::Hyperparams;
use sscl_core::Error;

pub const OUT_DIR_ENV: &str = "SSCL_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algo {
    Sscl,
    Knn,
    Srbc,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Sscl => "sscl",
            Algo::Knn => "knn",
            Algo::Srbc => "srbc",
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sscl" => Ok(Algo::Sscl),
            "knn" => Ok(Algo::Knn),
            "srbc" => Ok(Algo::Srbc),
            other => Err(Error::InvalidHyperparams {
                reason: format!("unknown algorithm {other:?} (expected sscl, knn, srbc)"),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    pub label_col: LabelColumn,
    pub algos: Vec<Algo>,
    pub hyper: Hyperparams,
    pub folds: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub stratify: bool,
    pub verbosity: u8,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: PathBuf::new(),
            label_col: LabelColumn::Index(0),
            algos: vec![Algo::Sscl, Algo::Knn, Algo::Srbc],
            hyper: Hyperparams::default(),
            folds: 10,
            seed: 0,
            out_dir: std::env::var(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|_| PathBuf::from("sscl_out")),
            jobs: 0,
            stratify: false,
            verbosity: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.folds < 2 {
            return Err(Error::FoldCountOutOfRange {
                fold_count: self.folds,
                n: usize::MAX,
            });
        }
        if self.algos.is_empty() {
            return Err(Error::InvalidHyperparams {
                reason: "no algorithms selected".into(),
            });
        }
        self.hyper.validate()
    }
}

pub fn parse_label_col(s: &str) -> LabelColumn {
    match s.trim().parse::<usize>() {
        Ok(i) => LabelColumn::Index(i),
        Err(_) => LabelColumn::Name(s.trim().to_string()),
    }
}

/// Reads a `key = value` config file (one pair per line, `#` comments).
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut map = HashMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidHyperparams {
                reason: format!("config line is not key=value: {line:?}"),
            });
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Applies config-file entries onto a config. Unknown keys are rejected so
/// typos do not silently vanish.
pub fn apply_file_entries(
    cfg: &mut ExperimentConfig,
    entries: &HashMap<String, String>,
) -> Result<(), Error> {
    let bad = |key: &str, value: &str| Error::InvalidHyperparams {
        reason: format!("config value {key}={value} cannot be parsed"),
    };
    for (key, value) in entries {
        match key.as_str() {
            "data" => cfg.data = PathBuf::from(value),
            "label_col" => cfg.label_col = parse_label_col(value),
            "algos" => {
                cfg.algos = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<Vec<Algo>, _>>()?;
            }
            "alpha" => cfg.hyper.alpha = value.parse().map_err(|_| bad(key, value))?,
            "beta" => cfg.hyper.beta = value.parse().map_err(|_| bad(key, value))?,
            "gamma" => cfg.hyper.gamma = value.parse().map_err(|_| bad(key, value))?,
            "k" => cfg.hyper.k = value.parse().map_err(|_| bad(key, value))?,
            "iters" => cfg.hyper.max_outer_iter = value.parse().map_err(|_| bad(key, value))?,
            "tol" => cfg.hyper.outer_tol = value.parse().map_err(|_| bad(key, value))?,
            "folds" => cfg.folds = value.parse().map_err(|_| bad(key, value))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad(key, value))?,
            "out" => cfg.out_dir = PathBuf::from(value),
            "jobs" => cfg.jobs = value.parse().map_err(|_| bad(key, value))?,
            "stratify" => cfg.stratify = value.parse().map_err(|_| bad(key, value))?,
            other => {
                return Err(Error::InvalidHyperparams {
                    reason: format!("unknown config key {other:?}"),
                })
            }
        }
    }
    Ok(())
}
