//! Saved model artifacts: a versioned JSON bundle of one-vs-rest models plus
//! the label names needed to report predictions in the original vocabulary.

use std::path::Path;

use serde_json;

use sscl_core::data::{one_vs_rest_tasks, Dataset};
use sscl_core::linalg::Matrix;
use sscl_core::sscl::{predict, predict_multiclass, train, Hyperparams, SsclModel};
use sscl_core::{Error, Result};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub dataset_name: String,
    pub label_names: Vec<String>,
    pub models: Vec<SsclModel>,
}

impl ModelBundle {
    /// Trains one-vs-rest models on the full dataset (missing cells imputed
    /// with its own feature means).
    pub fn fit(ds: &Dataset, hyper: &Hyperparams) -> Result<Self> {
        let fill = ds.observed_feature_means();
        let filled = ds.with_missing_filled(&fill);
        let tasks = one_vs_rest_tasks(&filled)?;
        let mut models = Vec::with_capacity(tasks.len());
        for task in &tasks {
            let h = hyper
                .clone()
                .with_seed(crate::experiment::derive_seed(hyper.seed, 0, task.positive_class as u64));
            let (model, _) = train(task, &h)?;
            models.push(model);
        }
        Ok(ModelBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            dataset_name: ds.name.clone(),
            label_names: ds.label_names.clone(),
            models,
        })
    }

    /// Predicted class id plus the winning score for one raw query row.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, f64)> {
        let class = predict_multiclass(&self.models, x)?;
        let score = if self.models.len() == 1 {
            predict(&self.models[0], x)?.1
        } else {
            let mut best = f64::NEG_INFINITY;
            for m in &self.models {
                best = best.max(predict(m, x)?.1);
            }
            best
        };
        Ok((class, score))
    }

    pub fn label_name(&self, class: usize) -> &str {
        self.label_names
            .get(class)
            .map(String::as_str)
            .unwrap_or("?")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("bundle serialization cannot fail");
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bundle: ModelBundle = serde_json::from_str(&text)?;
        if bundle.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::UnsupportedModelVersion {
                found: bundle.format_version,
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        Ok(bundle)
    }
}

/// Reads a CSV of feature rows (no label column; header auto-detected).
pub fn load_query_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, usize> = cells
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().map_err(|_| c))
            .collect();
        match parsed {
            Ok(row) => {
                if let Some(w) = width {
                    if row.len() != w {
                        return Err(Error::RaggedRow {
                            path: path.to_path_buf(),
                            line: line_no + 1,
                            expected: w,
                            got: row.len(),
                        });
                    }
                } else {
                    width = Some(row.len());
                }
                rows.push(row);
            }
            Err(col) => {
                // only the first row may be non-numeric (header)
                if rows.is_empty() && width.is_none() {
                    width = Some(cells.len());
                    continue;
                }
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no + 1,
                    column: col + 1,
                    value: cells[col].to_string(),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(Matrix::from_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sscl_core::synth::two_clusters;

    #[test]
    fn bundle_roundtrip_preserves_predictions() {
        let ds = two_clusters(12, (&[0.0, 0.0], &[8.0, 8.0]), 1.0, 5);
        let hyper = Hyperparams::new(1.0, 10.0, 0.2, 3).unwrap();
        let bundle = ModelBundle::fit(&ds, &hyper).unwrap();
        let path = std::env::temp_dir().join(format!("sscl_bundle_{}.json", std::process::id()));
        bundle.save(&path).unwrap();
        let back = ModelBundle::load(&path).unwrap();
        for i in 0..ds.n() {
            assert_eq!(
                bundle.predict(ds.features.row(i)).unwrap(),
                back.predict(ds.features.row(i)).unwrap()
            );
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn query_matrix_loads_with_and_without_header() {
        let p = std::env::temp_dir().join(format!("sscl_q_{}.csv", std::process::id()));
        std::fs::write(&p, "f1,f2\n1.0,2.0\n3.0,4.0\n").unwrap();
        let m = load_query_matrix(&p).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 2);
        std::fs::write(&p, "1.0,2.0\n3.0,4.0\n").unwrap();
        let m = load_query_matrix(&p).unwrap();
        assert_eq!(m.rows(), 2);
        std::fs::remove_file(p).ok();
    }
}
