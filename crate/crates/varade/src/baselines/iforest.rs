//! Isolation Forest: random binary isolation trees over subsamples, anomaly
//! score from the average path length.

use crate::error::{Result, VaradeError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoForestParams {
    pub n_trees: usize,
    pub subsample: usize,
    pub contamination: f64,
}

impl Default for IsoForestParams {
    fn default() -> Self {
        IsoForestParams {
            n_trees: 100,
            subsample: 256,
            contamination: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        value: f32,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
        depth: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoForest {
    pub params: IsoForestParams,
    pub trees: Vec<IsoTree>,
    /// actual subsample size used (min(subsample, n))
    pub psi: usize,
    /// scores above this flag roughly `contamination * n` training points
    pub threshold: f64,
    dim: usize,
}

/// Average unsuccessful-search path length in a BST of m nodes:
/// c(m) = 2*H(m-1) - 2*(m-1)/m, with c(1) = 0.
pub fn average_path_length(m: usize) -> f64 {
    match m {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => 2.0 * harmonic(m - 1) - 2.0 * (m - 1) as f64 / m as f64,
    }
}

fn harmonic(m: usize) -> f64 {
    if m <= 10_000 {
        (1..=m).map(|i| 1.0 / i as f64).sum()
    } else {
        (m as f64).ln() + EULER_MASCHERONI
    }
}

fn grow(
    nodes: &mut Vec<TreeNode>,
    points: &[Vec<f32>],
    idx: &mut [usize],
    depth: usize,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    if idx.len() <= 1 || depth >= cap {
        nodes.push(TreeNode::Leaf {
            size: idx.len(),
            depth,
        });
        return nodes.len() - 1;
    }
    let dim = points[idx[0]].len();
    // features that still vary among the routed points
    let mut candidates = Vec::new();
    for f in 0..dim {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &i in idx.iter() {
            lo = lo.min(points[i][f]);
            hi = hi.max(points[i][f]);
        }
        if hi > lo {
            candidates.push((f, lo, hi));
        }
    }
    if candidates.is_empty() {
        nodes.push(TreeNode::Leaf {
            size: idx.len(),
            depth,
        });
        return nodes.len() - 1;
    }
    let (feature, lo, hi) = candidates[rng.gen_range(0..candidates.len())];
    let value = rng.gen_range(lo..hi);
    let mid = partition_in_place(idx, |&i| points[i][feature] <= value);
    let slot = nodes.len();
    nodes.push(TreeNode::Leaf { size: 0, depth }); // placeholder
    let (left_idx, right_idx) = idx.split_at_mut(mid);
    let left = grow(nodes, points, left_idx, depth + 1, cap, rng);
    let right = grow(nodes, points, right_idx, depth + 1, cap, rng);
    nodes[slot] = TreeNode::Split {
        feature,
        value,
        left,
        right,
    };
    slot
}

fn partition_in_place<T, F: FnMut(&T) -> bool>(slice: &mut [T], mut pred: F) -> usize {
    let mut i = 0;
    for j in 0..slice.len() {
        if pred(&slice[j]) {
            slice.swap(i, j);
            i += 1;
        }
    }
    i
}

pub fn iso_fit(points: &[Vec<f32>], params: IsoForestParams, seed: u64) -> Result<IsoForest> {
    if points.len() < 2 {
        return Err(VaradeError::Config(format!(
            "isolation forest needs at least 2 points, got {}",
            points.len()
        )));
    }
    if !(0.0..=0.5).contains(&params.contamination) {
        return Err(VaradeError::Config("contamination must be in [0, 0.5]".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(VaradeError::shape("iso_fit", "inconsistent point dimensions"));
    }
    let psi = params.subsample.min(points.len());
    let cap = (psi as f64).log2().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        // uniform subsample without replacement
        let sample = rand::seq::index::sample(&mut rng, points.len(), psi).into_vec();
        let mut idx = sample;
        let mut nodes = Vec::new();
        grow(&mut nodes, points, &mut idx, 0, cap.max(1), &mut rng);
        trees.push(IsoTree { nodes });
    }
    let mut forest = IsoForest {
        params,
        trees,
        psi,
        threshold: 0.0,
        dim,
    };
    // threshold: the ceil(contamination * n)-th highest training score
    let mut scores: Vec<f64> = points.iter().map(|p| forest.score_unchecked(p)).collect();
    scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let flagged = ((params.contamination * points.len() as f64).ceil() as usize)
        .clamp(1, points.len());
    forest.threshold = scores[flagged - 1];
    Ok(forest)
}

impl IsoForest {
    /// Reassembles a fitted forest, used by the checkpoint loader.
    pub fn from_parts(
        params: IsoForestParams,
        trees: Vec<IsoTree>,
        psi: usize,
        threshold: f64,
        dim: usize,
    ) -> Self {
        IsoForest {
            params,
            trees,
            psi,
            threshold,
            dim,
        }
    }

    /// Path length of a query in one tree: leaf depth plus the unresolved
    /// subtree adjustment c(leaf size).
    fn path_length(&self, tree: &IsoTree, query: &[f32]) -> f64 {
        let mut node = 0usize;
        loop {
            match &tree.nodes[node] {
                TreeNode::Leaf { size, depth } => {
                    return *depth as f64 + average_path_length(*size);
                }
                TreeNode::Split {
                    feature,
                    value,
                    left,
                    right,
                } => {
                    node = if query[*feature] <= *value { *left } else { *right };
                }
            }
        }
    }

    fn score_unchecked(&self, query: &[f32]) -> f64 {
        let mean_path: f64 = self
            .trees
            .iter()
            .map(|t| self.path_length(t, query))
            .sum::<f64>()
            / self.trees.len() as f64;
        2f64.powf(-mean_path / average_path_length(self.psi))
    }

    /// s(x) = 2^(-E[h(x)] / c(psi)), in (0, 1).
    pub fn score(&self, query: &[f32]) -> Result<f64> {
        if query.len() != self.dim {
            return Err(VaradeError::shape(
                "iso_score",
                format!("query dim {}, forest dim {}", query.len(), self.dim),
            ));
        }
        Ok(self.score_unchecked(query))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_flagged(&self, score: f64) -> bool {
        score >= self.threshold
    }
}
