//! Exact k-nearest-neighbour max-distance scoring over a linear scan.

use crate::error::{Result, VaradeError};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex {
    points: Vec<Vec<f32>>,
    k: usize,
}

pub fn knn_fit(points: Vec<Vec<f32>>, k: usize) -> Result<KnnIndex> {
    if k == 0 {
        return Err(VaradeError::Config("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(VaradeError::Config(format!(
            "need at least k={k} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(VaradeError::shape("knn_fit", "inconsistent point dimensions"));
    }
    Ok(KnnIndex { points, k })
}

impl KnnIndex {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn points(&self) -> &[Vec<f32>] {
        &self.points
    }

    /// Euclidean distance to the k-th nearest stored point (the maximum over
    /// the k nearest).
    pub fn score(&self, query: &[f32]) -> Result<f64> {
        if query.len() != self.dim() {
            return Err(VaradeError::shape(
                "knn_score",
                format!("query dim {}, index dim {}", query.len(), self.dim()),
            ));
        }
        let mut dists: Vec<f64> = self
            .points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(query)
                    .map(|(a, b)| {
                        let d = *a as f64 - *b as f64;
                        d * d
                    })
                    .sum::<f64>()
            })
            .collect();
        let kth = self.k - 1;
        dists.select_nth_unstable_by(kth, |a, b| a.partial_cmp(b).expect("finite distances"));
        Ok(dists[kth].sqrt())
    }
}
