//! Ranking metrics for binary anomaly labels (1 = anomaly).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub runtime_seconds: f64,
    pub seed: Option<u64>,
    /// Free-form description of what produced the scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

fn check<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::dims("scores vs labels", labels.len(), scores.len()));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::invalid(format!("label {bad} is not 0 or 1")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((n_pos, labels.len() - n_pos))
}

fn cmp_scores<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).expect("NaN scores rejected earlier")
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `P(s_pos > s_neg) + P(s_pos = s_neg) / 2`, from one sort with midranks for ties.
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    let (n_pos, n_neg) = check(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC-AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp_scores(scores[a], scores[b]));

    // Sum of (1-based, tie-averaged) ranks of the positives.
    let mut pos_rank_sum = 0.0f64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        pos_rank_sum += mid_rank * positives as f64;
        start = end;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

/// Average precision: mean over positives of the precision at each positive's
/// rank, ranking by descending score with ties kept in original index order.
pub fn pr_auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    let (n_pos, _) = check(scores, labels)?;
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("PR-AUC needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps index order within ties
    order.sort_by(|&a, &b| cmp_scores(scores[b], scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] == 1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// Quadratic pairwise ROC-AUC, kept as a reference implementation.
pub fn brute_force_auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    let (n_pos, n_neg) = check(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC-AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut wins = 0.0f64;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

pub fn evaluate<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<EvalResult> {
    let (n_pos, n_neg) = check(scores, labels)?;
    Ok(EvalResult {
        roc_auc: roc_auc(scores, labels)?,
        pr_auc: pr_auc(scores, labels)?,
        n_pos,
        n_neg,
        runtime_seconds: 0.0,
        seed: None,
        config: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;

    const SCORES: [f64; 4] = [0.1, 0.4, 0.35, 0.8];
    const LABELS: [u8; 4] = [0, 0, 1, 1];

    #[test]
    fn four_sample_fixture() {
        assert!((roc_auc(&SCORES, &LABELS).unwrap() - 0.75).abs() < 1e-15);
        assert!((brute_force_auc(&SCORES, &LABELS).unwrap() - 0.75).abs() < 1e-15);
        assert!((pr_auc(&SCORES, &LABELS).unwrap() - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_tied_rankings() {
        let s = [0.1, 0.2, 0.9, 0.95];
        assert_eq!(roc_auc(&s, &LABELS).unwrap(), 1.0);
        assert_eq!(pr_auc(&s, &LABELS).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 4], &LABELS).unwrap(), 0.5);
        assert_eq!(brute_force_auc(&[0.3; 2], &[1, 0]).unwrap(), 0.5);
        assert_eq!(brute_force_auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn tie_break_follows_index_order() {
        // positive first among the tie -> precision 1 at its rank
        assert_eq!(pr_auc(&[0.5, 0.5], &[1, 0]).unwrap(), 1.0);
        assert_eq!(pr_auc(&[0.5, 0.5], &[0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(pr_auc(&[0.1, 0.2], &[0, 0]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(brute_force_auc(&[0.1, 0.2], &[0, 0]), Err(Error::UndefinedMetric(_))));
        assert!(pr_auc(&[0.1, 0.2], &[1, 1]).is_ok());
        assert!(roc_auc(&[0.1], &[1, 0]).is_err());
    }

    #[test]
    fn negating_scores_complements_auc() {
        let mut rng = Rng::new(17);
        let scores: Vec<f64> = (0..300).map(|_| rng.uniform()).collect();
        let labels: Vec<u8> = (0..300).map(|_| u8::from(rng.bernoulli(0.2))).collect();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        assert!((roc_auc(&neg, &labels).unwrap() - (1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn random_scores_have_prevalence_level_precision() {
        let mut total = 0.0;
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            let n = 10_000;
            let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 20 == 0)).collect();
            let scores: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            total += pr_auc(&scores, &labels).unwrap();
        }
        assert!((total / 20.0 - 0.05).abs() < 0.02, "{}", total / 20.0);
    }
}
