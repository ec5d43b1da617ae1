//! Exact k-nearest-neighbor search and per-point context matrices.
//!
//! The context of a point is the ordered list of its k nearest training
//! neighbors (self excluded), used as the dictionary that reconstructs it.
//! Search is brute force on squared Euclidean distance; ties break toward the
//! lower training index, so results are stable under input permutation once
//! rows are in canonical order.

use std::io::Write;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Neighbor ids and distances for every training point.
#[derive(Debug, Clone)]
pub struct ContextIndex {
    pub k: usize,
    /// Flat n×k: row i holds the ids of the k nearest neighbors of point i,
    /// ascending distance.
    neighbor_ids: Vec<usize>,
    /// Euclidean distances aligned with `neighbor_ids`.
    neighbor_dists: Vec<f64>,
    n: usize,
}

impl ContextIndex {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_ids[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn distances(&self, i: usize) -> &[f64] {
        &self.neighbor_dists[i * self.k..(i + 1) * self.k]
    }

    /// The d×k context matrix of point i, materialized with neighbor j as
    /// row j (a k×d layout; column j of the abstract matrix is row j here).
    pub fn context_matrix(&self, train: &Dataset, i: usize) -> Matrix {
        gather_rows(&train.features, self.neighbors(i))
    }

    /// Debug CSV `(point_index, rank, neighbor_index, distance)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "point_index,rank,neighbor_index,distance")?;
        for i in 0..self.n {
            for (rank, (&id, &dist)) in self
                .neighbors(i)
                .iter()
                .zip(self.distances(i))
                .enumerate()
            {
                writeln!(w, "{},{},{},{}", i, rank, id, dist)?;
            }
        }
        Ok(())
    }
}

/// Copies the listed feature rows into a k×d matrix (row j = j-th neighbor).
pub fn gather_rows(features: &Matrix, ids: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(ids.len(), features.cols());
    for (j, &id) in ids.iter().enumerate() {
        m.row_mut(j).copy_from_slice(features.row(id));
    }
    m
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k smallest (distance², index) pairs among candidates, ascending with index
/// tie-break.
fn select_k(mut cands: Vec<(f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    let cut = k.min(cands.len());
    cands.select_nth_unstable_by(cut - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cands.truncate(cut);
    cands.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cands
}

/// Exact brute-force neighbor index over the training set, self excluded.
pub fn build_context_index(train: &Dataset, k: usize) -> Result<ContextIndex> {
    let n = train.n();
    if k < 1 || k > n.saturating_sub(1) {
        return Err(Error::KOutOfRange {
            k,
            min: 1,
            max: n.saturating_sub(1),
        });
    }
    let mut neighbor_ids = Vec::with_capacity(n * k);
    let mut neighbor_dists = Vec::with_capacity(n * k);
    for i in 0..n {
        let query = train.features.row(i);
        let cands: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (squared_distance(query, train.features.row(j)), j))
            .collect();
        for (d2, id) in select_k(cands, k) {
            neighbor_ids.push(id);
            neighbor_dists.push(d2.sqrt());
        }
    }
    Ok(ContextIndex {
        k,
        neighbor_ids,
        neighbor_dists,
        n,
    })
}

/// k nearest training points to an arbitrary query (no self-exclusion).
/// Returns the ids and the k×d matrix of their feature rows.
pub fn query_context(train: &Dataset, x: &[f64], k: usize) -> Result<(Vec<usize>, Matrix)> {
    query_rows(&train.features, x, k)
}

/// Same as [`query_context`] but over a bare feature matrix.
pub fn query_rows(features: &Matrix, x: &[f64], k: usize) -> Result<(Vec<usize>, Matrix)> {
    let n = features.rows();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, min: 1, max: n });
    }
    if x.len() != features.cols() {
        return Err(Error::DimensionMismatch {
            expected: features.cols(),
            got: x.len(),
        });
    }
    let cands: Vec<(f64, usize)> = (0..n)
        .map(|j| (squared_distance(x, features.row(j)), j))
        .collect();
    let ids: Vec<usize> = select_k(cands, k).into_iter().map(|(_, id)| id).collect();
    let m = gather_rows(features, &ids);
    Ok((ids, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(points: &[Vec<f64>]) -> Dataset {
        Dataset::new(Matrix::from_rows(points), vec![0; points.len()], "t")
    }

    #[test]
    fn three_point_line() {
        let d = ds(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 0.0]]);
        let idx = build_context_index(&d, 1).unwrap();
        assert_eq!(idx.neighbors(0), &[1]);
        assert_eq!(idx.neighbors(1), &[0]);
        assert_eq!(idx.neighbors(2), &[1]);
    }

    #[test]
    fn full_neighborhood_is_permutation() {
        let d = ds(&[vec![0.0], vec![2.0], vec![-1.0], vec![7.0]]);
        let idx = build_context_index(&d, 3).unwrap();
        for i in 0..4 {
            let mut ids = idx.neighbors(i).to_vec();
            ids.sort_unstable();
            let expected: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            assert_eq!(ids, expected);
        }
    }

    #[test]
    fn duplicate_points_pick_zero_distance() {
        let d = ds(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![9.0, 9.0]]);
        let idx = build_context_index(&d, 1).unwrap();
        assert_eq!(idx.neighbors(0), &[1]);
        assert_eq!(idx.neighbors(1), &[0]);
        assert_eq!(idx.distances(0), &[0.0]);
    }

    #[test]
    fn k_out_of_range_rejected() {
        let d = ds(&[vec![0.0], vec![1.0]]);
        assert!(build_context_index(&d, 0).is_err());
        assert!(build_context_index(&d, 2).is_err());
        assert!(query_context(&d, &[0.5], 3).is_err());
    }

    #[test]
    fn query_hits_exact_training_point() {
        let d = ds(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let (ids, _) = query_context(&d, &[3.0], 1).unwrap();
        assert_eq!(ids, vec![3]);
    }

    #[test]
    fn query_orders_by_distance() {
        let d = ds(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let (ids, m) = query_context(&d, &[0.9, 0.0], 2).unwrap();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(m.row(0), &[0.0, 0.0]);
        assert_eq!(m.row(1), &[2.0, 0.0]);
    }

    #[test]
    fn equidistant_tie_prefers_lower_index() {
        let d = ds(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let (ids, _) = query_context(&d, &[1.0, 0.0], 1).unwrap();
        assert_eq!(ids, vec![0]);
    }

    #[test]
    fn context_matrix_rows_match_training_rows() {
        let d = ds(&[vec![0.0, 1.0], vec![1.0, 2.0], vec![5.0, 5.0]]);
        let idx = build_context_index(&d, 2).unwrap();
        let m = idx.context_matrix(&d, 0);
        for (j, &id) in idx.neighbors(0).iter().enumerate() {
            assert_eq!(m.row(j), d.features.row(id));
        }
    }

    #[test]
    fn distances_nondecreasing_within_rows() {
        let d = ds(&[
            vec![0.3, 1.0],
            vec![1.5, -2.0],
            vec![5.0, 0.1],
            vec![-4.0, 2.0],
            vec![0.0, 0.0],
        ]);
        let idx = build_context_index(&d, 4).unwrap();
        for i in 0..5 {
            let dist = idx.distances(i);
            for w in dist.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn csv_dump_has_row_per_neighbor() {
        let d = ds(&[vec![0.0], vec![1.0], vec![2.0]]);
        let idx = build_context_index(&d, 2).unwrap();
        let mut buf = Vec::new();
        idx.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
    }
}
