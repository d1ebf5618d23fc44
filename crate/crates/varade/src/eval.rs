//! Threshold-free evaluation: AUC-ROC via the rank statistic, ties counted
//! one half.

use crate::data::Label;
use crate::detector::ScoredPoint;
use crate::error::{Result, VaradeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    pub n_normal: usize,
    pub n_anomaly: usize,
    pub normal_scores: ClassStats,
    pub anomaly_scores: ClassStats,
}

fn class_stats(scores: &[f64]) -> ClassStats {
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    ClassStats { min, mean, max }
}

/// Probability that a uniformly random anomaly outscores a uniformly random
/// normal point, ties counted 1/2. Computed via average ranks, which equals
/// trapezoidal integration of the ROC curve.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(VaradeError::shape("auc_roc", "scores/labels length mismatch"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(VaradeError::Other(
            "AUC undefined: need at least one normal and one anomalous point".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(VaradeError::Numeric("NaN score in AUC input".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));
    // average ranks over tie groups, ranks are 1-based
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos * n_neg) as f64;
    Ok(auc)
}

pub fn evaluate(points: &[ScoredPoint]) -> Result<EvalReport> {
    let mut scores = Vec::with_capacity(points.len());
    let mut labels = Vec::with_capacity(points.len());
    let mut normal = Vec::new();
    let mut anomaly = Vec::new();
    for p in points {
        let label = p.label.ok_or_else(|| {
            VaradeError::Other("evaluation requires labeled scored points".into())
        })?;
        scores.push(p.score);
        let is_anomaly = label == Label::Anomaly;
        labels.push(is_anomaly);
        if is_anomaly {
            anomaly.push(p.score);
        } else {
            normal.push(p.score);
        }
    }
    let auc = auc_roc(&scores, &labels)?;
    Ok(EvalReport {
        auc,
        n_normal: normal.len(),
        n_anomaly: anomaly.len(),
        normal_scores: class_stats(&normal),
        anomaly_scores: class_stats(&anomaly),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(n^2) pairwise oracle.
    pub fn auc_pairwise(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for (i, &li) in labels.iter().enumerate() {
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_separation() {
        let auc = auc_roc(&[1.0, 2.0, 3.0, 4.0], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn perfect_inversion() {
        let auc = auc_roc(&[4.0, 3.0, 2.0, 1.0], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn all_ties_give_half() {
        let auc = auc_roc(&[1.0, 1.0, 1.0, 1.0], &[false, true, false, true]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(auc_roc(&[1.0, 2.0], &[true, true]).is_err());
        assert!(auc_roc(&[1.0, 2.0], &[false, false]).is_err());
    }

    #[test]
    fn matches_pairwise_oracle_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let n = rng.gen_range(4..=200);
            // coarse grid so ties actually occur
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..10) as f64 / 2.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            labels[0] = true;
            labels[1] = false;
            let fast = auc_roc(&scores, &labels).unwrap();
            let slow = auc_pairwise(&scores, &labels);
            assert!(
                (fast - slow).abs() < 1e-12,
                "rank {fast} vs pairwise {slow} on n={n}"
            );
        }
    }

    #[test]
    fn invariant_under_monotone_transforms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        let scores: Vec<f64> = (0..100).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut labels: Vec<bool> = (0..100).map(|_| rng.gen_bool(0.2)).collect();
        labels[0] = true;
        labels[1] = false;
        let base = auc_roc(&scores, &labels).unwrap();
        let exp_scores: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        assert_eq!(auc_roc(&exp_scores, &labels).unwrap(), base);
        assert_eq!(auc_roc(&affine, &labels).unwrap(), base);
    }

    #[test]
    fn complement_identity_without_ties() {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let mut scores: Vec<f64> = (0..60).map(|i| i as f64).collect();
        scores.shuffle(&mut rng);
        let mut labels: Vec<bool> = (0..60).map(|_| rng.gen_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let a = auc_roc(&scores, &labels).unwrap();
        let b = auc_roc(&neg, &labels).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }
}
