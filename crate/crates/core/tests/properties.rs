use anorand::data::{standardize, Dataset};
use anorand::labelgen::{build_training_set, smote_oversample, LabelGenConfig, Provenance};
use anorand::math::{bce_loss, Matrix, Rng};
use anorand::metrics::{brute_force_auc, pr_auc, roc_auc};
use anorand::model::{fused_score, ScoreReport};
use proptest::prelude::*;

/// Scores on a coarse grid (to force ties) with at least one label of each class.
fn scored_labels(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2..max_n).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..40).prop_map(|v| v as f64 / 8.0 - 2.0), n),
            prop::collection::vec(0u8..2, n - 2),
        )
            .prop_map(|(scores, mut labels)| {
                labels.push(0);
                labels.push(1);
                (scores, labels)
            })
    })
}

fn oracle_ap(scores: &[f64], labels: &[u8]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] == 1 {
            hits += 1.0;
            sum += hits / (rank + 1) as f64;
        }
    }
    sum / n_pos
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn roc_auc_matches_pairwise_oracle((scores, labels) in scored_labels(1000)) {
        let fast = roc_auc(&scores, &labels).unwrap();
        let slow = brute_force_auc(&scores, &labels).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn average_precision_matches_rank_walk((scores, labels) in scored_labels(300)) {
        prop_assert_eq!(pr_auc(&scores, &labels).unwrap(), oracle_ap(&scores, &labels));
    }

    #[test]
    fn metrics_invariant_under_exp((scores, labels) in scored_labels(300)) {
        let lifted: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), roc_auc(&lifted, &labels).unwrap());
        prop_assert_eq!(pr_auc(&scores, &labels).unwrap(), pr_auc(&lifted, &labels).unwrap());
    }

    #[test]
    fn perfect_ranker_scores_one(n_neg in 1usize..100, n_pos in 1usize..30) {
        let labels: Vec<u8> = (0..n_neg + n_pos).map(|i| u8::from(i >= n_neg)).collect();
        let scores: Vec<f64> = (0..n_neg + n_pos).map(|i| i as f64).collect();
        prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), 1.0);
        prop_assert_eq!(pr_auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn bce_is_nonnegative_and_finite(
        pairs in prop::collection::vec((0.0f64..=1.0, 0u8..2), 1..50),
    ) {
        let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
        let t: Vec<f64> = pairs.iter().map(|x| x.1 as f64).collect();
        let l = bce_loss(&p, &t).unwrap();
        prop_assert!(l.is_finite() && l >= 0.0);
    }

    #[test]
    fn fusion_identity_and_range(
        nd in prop::collection::vec(0.0f64..1.0, 1..40),
        alpha in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::new(seed);
        let ae: Vec<f64> = nd.iter().map(|_| rng.uniform_range(0.5, 1.0)).collect();
        let r = ScoreReport::fuse(nd.clone(), ae.clone(), alpha).unwrap();
        for i in 0..nd.len() {
            prop_assert_eq!(r.y_fused[i], (1.0 - alpha) * nd[i] + alpha * ae[i]);
            prop_assert!(r.y_fused[i] >= nd[i].min(ae[i]) - 1e-15 && r.y_fused[i] <= nd[i].max(ae[i]) + 1e-15);
        }
        if alpha < 1.0 {
            prop_assert!(fused_score(0.7, 0.6, alpha) > fused_score(0.6, 0.6, alpha));
        }
    }

    #[test]
    fn training_set_labels_follow_provenance(n in 60usize..400, seed in any::<u64>(), sigma in 0.0f64..2.0) {
        let mut rng = Rng::new(seed);
        let normals = Matrix::from_fn(n, 3, |_, _| rng.standard_normal::<f64>());
        let config = LabelGenConfig { noise_sigma: sigma, seed, ..LabelGenConfig::default() };
        let set = build_training_set(&normals, &config).unwrap();
        for (label, kind) in set.labels.iter().zip(&set.provenance) {
            prop_assert_eq!(*label, kind.label());
        }
        let anomalies = set.n_anomalies() as f64;
        let remaining = set.count(Provenance::OriginalNormal) as f64;
        // smallest count reaching the target fraction
        prop_assert!(anomalies / (remaining + anomalies) >= 0.05 - 1e-12);
        prop_assert!((anomalies - 1.0) / (remaining + anomalies - 1.0) < 0.05
            || set.count(Provenance::SmoteSynthetic) == 0);
    }

    #[test]
    fn standardization_is_idempotent(rows in 2usize..40, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = Matrix::from_fn(rows, 3, |_, c| rng.uniform_range(-5.0, 5.0) * (c + 1) as f64);
        let data = Dataset::new(x, None).unwrap();
        let (once, _) = standardize(&data, &[]).unwrap();
        let (twice, _) = standardize(&once, &[]).unwrap();
        for (a, b) in once.features.as_slice().iter().zip(twice.features.as_slice()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn smote_inside_unit_circle_stays_inside() {
    let mut rng = Rng::new(99);
    let mut points = Vec::new();
    while points.len() < 100 {
        let p = [rng.uniform_range(-1.0f64, 1.0), rng.uniform_range(-1.0, 1.0)];
        if p[0] * p[0] + p[1] * p[1] <= 1.0 {
            points.push(p);
        }
    }
    let seeds = Matrix::from_rows(&points).unwrap();
    let offspring = smote_oversample(&seeds, 5, 1000, &mut rng).unwrap();
    // convex combinations of points in a convex set stay in it
    for row in offspring.row_iter() {
        assert!((row[0] * row[0] + row[1] * row[1]).sqrt() <= 1.0 + 1e-9);
    }
}
