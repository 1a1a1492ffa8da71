//! Exact Euclidean k-nearest-neighbor search by full scan.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::{euclidean, Matrix};

/// One query hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

fn by_distance_then_index(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.index.cmp(&b.index))
}

/// Immutable brute-force index over the rows of a matrix.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Matrix,
}

impl NeighborIndex {
    pub fn build(points: Matrix) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Data("cannot index an empty point set".into()));
        }
        if !points.all_finite() {
            return Err(Error::Data("index points must be finite".into()));
        }
        Ok(NeighborIndex { points })
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    /// Up to `k` nearest rows to `q`, by nondecreasing distance with ties
    /// going to the lower row index. `k` larger than the pool is clamped.
    ///
    /// With `exclude_exact_match`, rows at distance exactly zero are skipped.
    pub fn query(&self, q: &[f64], k: usize, exclude_exact_match: bool) -> Result<Vec<Neighbor>> {
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: q.len(),
            });
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let mut hits: Vec<Neighbor> = self
            .points
            .iter_rows()
            .enumerate()
            .map(|(index, row)| Neighbor {
                index,
                distance: euclidean(row, q),
            })
            .filter(|n| !(exclude_exact_match && n.distance == 0.0))
            .collect();
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, by_distance_then_index);
            hits.truncate(k);
        }
        hits.sort_unstable_by(by_distance_then_index);
        Ok(hits)
    }

    /// Distance from `q` to its `k`-th nearest row (1-based `k`).
    pub fn kth_distance(&self, q: &[f64], k: usize, exclude_exact_match: bool) -> Result<f64> {
        let hits = self.query(q, k, exclude_exact_match)?;
        if hits.len() < k {
            return Err(Error::Data(format!(
                "only {} neighbor(s) available, need {k}",
                hits.len()
            )));
        }
        Ok(hits[k - 1].distance)
    }
}
