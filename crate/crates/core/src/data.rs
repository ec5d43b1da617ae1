//! Dataset ingestion, standardization, fold splitting, task construction,
//! and accuracy scoring.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A labeled feature matrix. Labels are dense class ids assigned in
/// first-appearance order; the original label strings are kept in
/// `label_names` for reporting.
///
/// Cells that were missing in the source file (the `?` convention) are filled
/// with the per-feature mean over the observed entries at load time, and their
/// positions are kept in `missing` so a cross-validation pipeline can re-impute
/// them from training-fold statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub name: String,
    pub missing: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, name: impl Into<String>) -> Self {
        assert_eq!(features.rows(), labels.len(), "labels must match rows");
        let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        Dataset {
            features,
            labels,
            label_names: (0..classes).map(|c| c.to_string()).collect(),
            name: name.into(),
            missing: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.label_names.len()
    }

    /// Distinct class ids present in `labels`, ascending.
    pub fn present_classes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.class_count().max(self.labels.iter().map(|&l| l + 1).max().unwrap_or(0))];
        for &l in &self.labels {
            seen[l] = true;
        }
        (0..seen.len()).filter(|&c| seen[c]).collect()
    }

    /// Row subset, preserving label ids and remapping missing-cell positions.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let mut features = Matrix::zeros(idx.len(), self.dim());
        let mut labels = Vec::with_capacity(idx.len());
        for (new_row, &old_row) in idx.iter().enumerate() {
            features.row_mut(new_row).copy_from_slice(self.features.row(old_row));
            labels.push(self.labels[old_row]);
        }
        let back: HashMap<usize, usize> = idx.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let missing = self
            .missing
            .iter()
            .filter_map(|&(r, c)| back.get(&r).map(|&nr| (nr, c)))
            .collect();
        Dataset {
            features,
            labels,
            label_names: self.label_names.clone(),
            name: self.name.clone(),
            missing,
        }
    }

    /// Per-feature mean over entries that were actually observed
    /// (missing cells excluded).
    pub fn observed_feature_means(&self) -> Vec<f64> {
        let n = self.n();
        let d = self.dim();
        let mut miss = vec![false; n * d];
        for &(r, c) in &self.missing {
            miss[r * d + c] = true;
        }
        let mut sum = vec![0.0; d];
        let mut count = vec![0usize; d];
        for r in 0..n {
            let row = self.features.row(r);
            for c in 0..d {
                if !miss[r * d + c] {
                    sum[c] += row[c];
                    count[c] += 1;
                }
            }
        }
        (0..d)
            .map(|c| if count[c] > 0 { sum[c] / count[c] as f64 } else { 0.0 })
            .collect()
    }

    /// Copy with every missing cell replaced by the supplied per-feature value.
    pub fn with_missing_filled(&self, fill: &[f64]) -> Dataset {
        assert_eq!(fill.len(), self.dim());
        let mut out = self.clone();
        for &(r, c) in &self.missing {
            out.features.row_mut(r)[c] = fill[c];
        }
        out
    }
}

/// A binary view over a dataset: `+1` for the positive class, `-1` otherwise.
#[derive(Debug, Clone)]
pub struct BinaryTask<'a> {
    pub dataset: &'a Dataset,
    pub positive_class: usize,
    /// Set when the task covers exactly two classes, so binary predictions can
    /// be mapped back to a class id.
    pub negative_class: Option<usize>,
    pub binary_labels: Vec<f64>,
}

impl<'a> BinaryTask<'a> {
    pub fn new(dataset: &'a Dataset, positive_class: usize) -> Self {
        let binary_labels = dataset
            .labels
            .iter()
            .map(|&l| if l == positive_class { 1.0 } else { -1.0 })
            .collect();
        let present = dataset.present_classes();
        let negative_class = if present.len() == 2 {
            present.iter().copied().find(|&c| c != positive_class)
        } else {
            None
        };
        BinaryTask {
            dataset,
            positive_class,
            negative_class,
            binary_labels,
        }
    }

    /// True when both labels occur.
    pub fn has_both_labels(&self) -> bool {
        self.binary_labels.iter().any(|&y| y > 0.0) && self.binary_labels.iter().any(|&y| y < 0.0)
    }
}

/// Per-feature affine transform `(x - mean) / scale`, fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

/// Assignment of each point to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub fold_count: usize,
    pub assignments: Vec<usize>,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    /// Two-column CSV `(point_index, fold)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "point_index,fold")?;
        for (i, f) in self.assignments.iter().enumerate() {
            writeln!(w, "{},{}", i, f)?;
        }
        Ok(())
    }
}

/// How the label column is identified in a CSV file.
#[derive(Debug, Clone)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

fn is_numeric_cell(cell: &str) -> bool {
    let t = cell.trim();
    t == "?" || t.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false)
}

/// Loads a comma-separated file into a [`Dataset`].
///
/// A header row is auto-detected: if any cell of the first row outside the
/// label column is non-numeric, the row is treated as a header. Labels become
/// dense integer ids in first-appearance order. `?` cells are treated as
/// missing, filled with the per-feature observed mean, and their positions are
/// recorded in [`Dataset::missing`].
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
        })?;

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })?;
        // ignore fully blank lines
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }

    let width = rows[0].len();
    if width < 2 {
        return Err(Error::RaggedRow {
            path: path.to_path_buf(),
            line: 1,
            expected: 2,
            got: width,
        });
    }

    // Resolve the label column; a named column requires a header.
    let provisional_label_idx = match label_column {
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(_) => None,
    };
    if let Some(idx) = provisional_label_idx {
        if idx >= width {
            return Err(Error::LabelColumnOutOfRange { index: idx, width });
        }
    }

    let first_is_header = match label_column {
        LabelColumn::Name(_) => true,
        LabelColumn::Index(idx) => rows[0]
            .iter()
            .enumerate()
            .any(|(j, cell)| j != *idx && !is_numeric_cell(cell)),
    };

    let label_idx = match label_column {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => rows[0]
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::LabelColumnNotFound { name: name.clone() })?,
    };

    let data_rows = &rows[if first_is_header { 1 } else { 0 }..];
    if data_rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }

    let n = data_rows.len();
    let d = width - 1;
    let mut features = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut label_names: Vec<String> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut missing: Vec<(usize, usize)> = Vec::new();

    for (r, rec) in data_rows.iter().enumerate() {
        let line = r + 1 + if first_is_header { 1 } else { 0 };
        if rec.len() != width {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected: width,
                got: rec.len(),
            });
        }
        let mut col = 0usize;
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                let key = cell.trim().to_string();
                let next = label_names.len();
                let id = *label_ids.entry(key.clone()).or_insert_with(|| {
                    label_names.push(key);
                    next
                });
                labels.push(id);
                continue;
            }
            let t = cell.trim();
            if t == "?" {
                missing.push((r, col));
                features.row_mut(r)[col] = f64::NAN; // placeholder, filled below
            } else {
                let v: f64 = t.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: j + 1,
                    value: t.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        column: j + 1,
                        value: t.to_string(),
                    });
                }
                features.row_mut(r)[col] = v;
            }
            col += 1;
        }
    }

    let mut ds = Dataset {
        features,
        labels,
        label_names,
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
        missing,
    };

    if !ds.missing.is_empty() {
        // NaN placeholders are excluded from the observed means.
        let d = ds.dim();
        let mut sum = vec![0.0; d];
        let mut count = vec![0usize; d];
        for r in 0..ds.n() {
            let row = ds.features.row(r);
            for c in 0..d {
                if row[c].is_finite() {
                    sum[c] += row[c];
                    count[c] += 1;
                }
            }
        }
        let fill: Vec<f64> = (0..d)
            .map(|c| if count[c] > 0 { sum[c] / count[c] as f64 } else { 0.0 })
            .collect();
        for &(r, c) in &ds.missing.clone() {
            ds.features.row_mut(r)[c] = fill[c];
        }
    }

    Ok(ds)
}

/// Per-feature mean and population standard deviation over the training set.
/// Features with standard deviation below `1e-12` get scale 1.
pub fn fit_standardizer(train: &Dataset) -> Standardizer {
    let n = train.n();
    let d = train.dim();
    assert!(n >= 1);
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(train.features.row(r)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for r in 0..n {
        for (s, (v, m)) in var.iter_mut().zip(train.features.row(r).iter().zip(&mean)) {
            let dv = v - m;
            *s += dv * dv;
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd < 1e-12 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Standardizer { mean, scale }
}

pub fn apply_standardizer(s: &Standardizer, ds: &Dataset) -> Result<Dataset> {
    if ds.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: ds.dim(),
        });
    }
    let mut out = ds.clone();
    for r in 0..out.n() {
        let row = out.features.row_mut(r);
        for (v, (m, sc)) in row.iter_mut().zip(s.mean.iter().zip(&s.scale)) {
            *v = (*v - m) / sc;
        }
    }
    Ok(out)
}

/// Uniform random (unstratified) k-fold split; deterministic for a fixed seed.
/// Fold sizes differ by at most one.
pub fn kfold(n: usize, fold_count: usize, seed: u64) -> Result<FoldSplit> {
    if fold_count < 2 || fold_count > n {
        return Err(Error::FoldCountOutOfRange { fold_count, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignments = vec![0usize; n];
    for (pos, &point) in order.iter().enumerate() {
        assignments[point] = pos % fold_count;
    }
    Ok(FoldSplit {
        fold_count,
        assignments,
    })
}

/// Stratified variant: shuffles within each class and deals classes
/// round-robin so per-class proportions are approximately preserved.
pub fn kfold_stratified(labels: &[usize], fold_count: usize, seed: u64) -> Result<FoldSplit> {
    let n = labels.len();
    if fold_count < 2 || fold_count > n {
        return Err(Error::FoldCountOutOfRange { fold_count, n });
    }
    let mut by_class: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut classes: Vec<usize> = by_class.keys().copied().collect();
    classes.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; n];
    let mut next_fold = 0usize;
    for c in classes {
        let idx = by_class.get_mut(&c).unwrap();
        idx.shuffle(&mut rng);
        for &point in idx.iter() {
            assignments[point] = next_fold;
            next_fold = (next_fold + 1) % fold_count;
        }
    }
    Ok(FoldSplit {
        fold_count,
        assignments,
    })
}

/// One binary task per class present in the dataset; a dataset with exactly
/// two classes yields a single task with the lower class id positive.
pub fn one_vs_rest_tasks(ds: &Dataset) -> Result<Vec<BinaryTask<'_>>> {
    let present = ds.present_classes();
    if present.len() < 2 {
        return Err(Error::SingleClass {
            found: present.len(),
        });
    }
    if present.len() == 2 {
        return Ok(vec![BinaryTask::new(ds, present[0])]);
    }
    Ok(present.into_iter().map(|c| BinaryTask::new(ds, c)).collect())
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    let hits = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "sscl_data_test_{}_{}",
            std::process::id(),
            name
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn load_maps_labels_in_first_appearance_order() {
        let p = write_temp("basic.csv", "1.0,2.0,A\n3.0,4.0,B\n5.0,6.0,A\n");
        let ds = load_csv(&p, &LabelColumn::Index(2)).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.label_names, vec!["A", "B"]);
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn load_reports_bad_cell_position() {
        let p = write_temp("bad.csv", "1.0,2.0,A\nabc,4.0,B\n");
        let err = load_csv(&p, &LabelColumn::Index(2)).unwrap_err();
        match err {
            Error::Parse { line, column, value, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 1);
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error: {other:?}"),
        }
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn load_rejects_ragged_rows() {
        let p = write_temp("ragged.csv", "1.0,2.0,A\n3.0,B\n");
        let err = load_csv(&p, &LabelColumn::Index(2)).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { line: 2, .. }));
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn load_rejects_empty_file() {
        let p = write_temp("empty.csv", "");
        assert!(matches!(
            load_csv(&p, &LabelColumn::Index(0)),
            Err(Error::EmptyFile { .. })
        ));
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn header_is_autodetected_and_label_by_name_works() {
        let p = write_temp("hdr.csv", "f1,f2,class\n1.0,2.0,A\n3.0,4.0,B\n");
        let ds = load_csv(&p, &LabelColumn::Name("class".into())).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.labels, vec![0, 1]);
        let ds2 = load_csv(&p, &LabelColumn::Index(2)).unwrap();
        assert_eq!(ds2.n(), 2);
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn missing_cells_are_mean_filled_and_tracked() {
        let p = write_temp("miss.csv", "1.0,5.0,A\n?,7.0,B\n3.0,?,A\n");
        let ds = load_csv(&p, &LabelColumn::Index(2)).unwrap();
        assert_eq!(ds.missing, vec![(1, 0), (2, 1)]);
        assert!((ds.features[(1, 0)] - 2.0).abs() < 1e-12); // mean of 1,3
        assert!((ds.features[(2, 1)] - 6.0).abs() < 1e-12); // mean of 5,7
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn standardizer_two_point_example() {
        let ds = Dataset::new(Matrix::from_rows(&[vec![1.0], vec![3.0]]), vec![0, 1], "t");
        let s = fit_standardizer(&ds);
        assert_eq!(s.mean, vec![2.0]);
        assert_eq!(s.scale, vec![1.0]);
        let q = Dataset::new(Matrix::from_rows(&[vec![2.0]]), vec![0], "q");
        let out = apply_standardizer(&s, &q).unwrap();
        assert_eq!(out.features[(0, 0)], 0.0);
    }

    #[test]
    fn standardizer_floors_constant_features() {
        let ds = Dataset::new(Matrix::from_rows(&[vec![5.0], vec![5.0]]), vec![0, 1], "t");
        let s = fit_standardizer(&ds);
        assert_eq!(s.mean, vec![5.0]);
        assert_eq!(s.scale, vec![1.0]);
    }

    #[test]
    fn standardizer_hand_example() {
        let ds = Dataset::new(
            Matrix::from_rows(&[vec![0.0, 2.0], vec![4.0, 2.0]]),
            vec![0, 1],
            "t",
        );
        let s = fit_standardizer(&ds);
        assert_eq!(s.mean, vec![2.0, 2.0]);
        assert_eq!(s.scale, vec![2.0, 1.0]);
        let q = Dataset::new(Matrix::from_rows(&[vec![4.0, 3.0]]), vec![0], "q");
        let out = apply_standardizer(&s, &q).unwrap();
        assert_eq!(out.features.row(0), &[1.0, 1.0]);
    }

    #[test]
    fn standardizer_rejects_dimension_mismatch() {
        let ds = Dataset::new(Matrix::from_rows(&[vec![1.0, 2.0]]), vec![0], "t");
        let s = fit_standardizer(&ds);
        let q = Dataset::new(Matrix::from_rows(&[vec![1.0]]), vec![0], "q");
        assert!(matches!(
            apply_standardizer(&s, &q),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kfold_examples() {
        let f = kfold(10, 10, 7).unwrap();
        for fold in 0..10 {
            assert_eq!(f.test_indices(fold).len(), 1);
        }
        let f = kfold(10, 3, 7).unwrap();
        let mut sizes: Vec<usize> = (0..3).map(|k| f.test_indices(k).len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(kfold(10, 3, 7).unwrap(), f);
        assert!(kfold(10, 1, 7).is_err());
        assert!(kfold(10, 11, 7).is_err());
    }

    #[test]
    fn stratified_kfold_balances_classes() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let f = kfold_stratified(&labels, 4, 3).unwrap();
        for fold in 0..4 {
            let test = f.test_indices(fold);
            assert_eq!(test.len(), 10);
            let pos = test.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!(pos, 5);
        }
    }

    #[test]
    fn one_vs_rest_shapes() {
        let ds = Dataset::new(
            Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]),
            vec![0, 1, 0, 1],
            "bin",
        );
        let tasks = one_vs_rest_tasks(&ds).unwrap();
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].positive_class, 0);
        assert_eq!(tasks[0].negative_class, Some(1));
        assert_eq!(tasks[0].binary_labels, vec![1.0, -1.0, 1.0, -1.0]);

        let ds3 = Dataset::new(
            Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]),
            vec![0, 1, 2],
            "tri",
        );
        let tasks = one_vs_rest_tasks(&ds3).unwrap();
        assert_eq!(tasks.len(), 3);
        assert_eq!(tasks[2].binary_labels, vec![-1.0, -1.0, 1.0]);
        assert_eq!(tasks[2].negative_class, None);

        let ds1 = Dataset::new(Matrix::from_rows(&[vec![0.0]]), vec![0], "one");
        assert!(one_vs_rest_tasks(&ds1).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 1, 0], &[1, 1, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn fold_split_csv_roundtrip_shape() {
        let f = kfold(5, 2, 1).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("point_index,fold"));
    }
}
