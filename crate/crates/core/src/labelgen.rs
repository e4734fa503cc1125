//! Synthetic anomaly labels for semi-supervised training.
//!
//! A random handful of normal rows is pulled out, grown with SMOTE until the
//! anomaly class reaches its target share, and every such row is jittered with
//! Gaussian noise. The jittered rows are labelled 1, the untouched normals 0.
//!
//! The anomaly count `s` solves `s / (remaining + s) = target`, rounded up,
//! where `remaining` counts the normals left after the seeds were taken out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::matrix::squared_distance;
use crate::math::{Matrix, Rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGenConfig {
    pub subset_fraction: f64,
    pub target_anomaly_fraction: f64,
    pub smote_k: usize,
    /// Std of the additive noise, in standardized feature units.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for LabelGenConfig {
    fn default() -> Self {
        Self {
            subset_fraction: 0.02,
            target_anomaly_fraction: 0.05,
            smote_k: 5,
            noise_sigma: 0.6,
            seed: 0,
        }
    }
}

impl LabelGenConfig {
    pub fn validate(&self) -> Result<()> {
        let (sub, target) = (self.subset_fraction, self.target_anomaly_fraction);
        if !(sub > 0.0 && sub < target && target < 0.5) {
            return Err(Error::arg(format!(
                "need 0 < subset_fraction < target_anomaly_fraction < 0.5, got {sub} and {target}"
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::arg(format!("noise_sigma must be nonnegative, got {}", self.noise_sigma)));
        }
        if self.smote_k == 0 {
            return Err(Error::arg("smote_k must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    OriginalNormal,
    SelectedSeed,
    SmoteSynthetic,
}

impl Provenance {
    pub fn label(self) -> u8 {
        match self {
            Provenance::OriginalNormal => 0,
            Provenance::SelectedSeed | Provenance::SmoteSynthetic => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrainingSet<T> {
    pub features: Matrix<T>,
    pub labels: Vec<u8>,
    pub provenance: Vec<Provenance>,
}

impl<T: Scalar> LabeledTrainingSet<T> {
    pub fn new(features: Matrix<T>, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::dims("training labels", features.rows(), labels.len()));
        }
        let provenance = labels
            .iter()
            .map(|&l| match l {
                0 => Ok(Provenance::OriginalNormal),
                1 => Ok(Provenance::SelectedSeed),
                other => Err(Error::invalid(format!("label {other} is not 0 or 1"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            features,
            labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn anomaly_fraction(&self) -> f64 {
        self.n_anomalies() as f64 / self.len().max(1) as f64
    }

    pub fn count(&self, kind: Provenance) -> usize {
        self.provenance.iter().filter(|&&p| p == kind).count()
    }
}

/// `ceil(fraction * n)` distinct rows uniformly without replacement.
/// Returns `(selected, remaining)`; `remaining` is in ascending order.
pub fn select_seed_subset(n: usize, fraction: f64, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::arg(format!("seed fraction must lie in (0, 1), got {fraction}")));
    }
    let k = ceil_count(fraction * n as f64);
    if k < 1 || k >= n {
        return Err(Error::arg(format!("fraction {fraction} of {n} rows selects {k} seeds")));
    }
    let selected = rng.sample_indices(n, k);
    let mut taken = vec![false; n];
    for &i in &selected {
        taken[i] = true;
    }
    let remaining = (0..n).filter(|&i| !taken[i]).collect();
    Ok((selected, remaining))
}

/// Ceiling that ignores floating-point fuzz just above an integer
/// (`0.02 * 10000` evaluates to `200.00000000000003`).
fn ceil_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// One SMOTE offspring with its parents, for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoteDraw {
    pub base: usize,
    pub neighbour: usize,
    pub t: f64,
}

/// For every seed row, the indices of its `k` nearest other seed rows
/// (Euclidean, ties broken by lower index).
pub fn nearest_neighbours<T: Scalar>(seeds: &Matrix<T>, k: usize) -> Vec<Vec<usize>> {
    let n = seeds.rows();
    (0..n)
        .map(|i| {
            let mut others: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(seeds.row(i), seeds.row(j)), j))
                .collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
            others.truncate(k);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Draws `n_new` points `a + t (b - a)` with `a` a uniform seed row, `b` one of
/// its `k` nearest seed rows and `t ~ U[0, 1]`.
pub fn smote_oversample<T: Scalar>(seeds: &Matrix<T>, k: usize, n_new: usize, rng: &mut Rng) -> Result<Matrix<T>> {
    Ok(smote_oversample_traced(seeds, k, n_new, rng)?.0)
}

pub fn smote_oversample_traced<T: Scalar>(
    seeds: &Matrix<T>,
    k: usize,
    n_new: usize,
    rng: &mut Rng,
) -> Result<(Matrix<T>, Vec<SmoteDraw>)> {
    smote_with(seeds, k, n_new, rng, |rng| rng.uniform::<f64>())
}

/// SMOTE with a caller-supplied interpolation draw.
pub fn smote_with<T: Scalar>(
    seeds: &Matrix<T>,
    k: usize,
    n_new: usize,
    rng: &mut Rng,
    mut draw_t: impl FnMut(&mut Rng) -> f64,
) -> Result<(Matrix<T>, Vec<SmoteDraw>)> {
    let n = seeds.rows();
    if n < 2 {
        return Err(Error::arg(format!("SMOTE needs at least 2 seed rows, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::arg(format!("SMOTE k must lie in 1..{n}, got {k}")));
    }
    let neighbours = nearest_neighbours(seeds, k);
    let mut out = Matrix::zeros(n_new, seeds.cols());
    let mut draws = Vec::with_capacity(n_new);
    for r in 0..n_new {
        let base = rng.below(n);
        let neighbour = neighbours[base][rng.below(k)];
        let t = draw_t(rng);
        let tt = T::lit(t);
        let (a, b) = (seeds.row(base), seeds.row(neighbour));
        for ((o, &x), &y) in out.row_mut(r).iter_mut().zip(a).zip(b) {
            *o = x + tt * (y - x);
        }
        draws.push(SmoteDraw { base, neighbour, t });
    }
    Ok((out, draws))
}

/// Adds i.i.d. `N(0, sigma^2)` to every entry.
pub fn gaussian_perturb<T: Scalar>(rows: &Matrix<T>, sigma: f64, rng: &mut Rng) -> Result<Matrix<T>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::arg(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(rows.clone());
    }
    let s = T::lit(sigma);
    Ok(rows.map(|x| x + s * rng.standard_normal::<T>()))
}

/// Number of synthetic anomalies `s` with `s / (remaining + s) >= target`, minimal.
pub fn anomaly_count(remaining: usize, target: f64) -> usize {
    ceil_count(target * remaining as f64 / (1.0 - target))
}

/// Seeds, SMOTE offspring and remaining normals, with row order shuffled.
pub fn build_training_set<T: Scalar>(normals: &Matrix<T>, config: &LabelGenConfig) -> Result<LabeledTrainingSet<T>> {
    config.validate()?;
    let mut rng = Rng::stream(config.seed, Stream::LabelGen);
    let (selected, remaining) = select_seed_subset(normals.rows(), config.subset_fraction, &mut rng)?;

    let total_anomalies = anomaly_count(remaining.len(), config.target_anomaly_fraction);
    let n_smote = total_anomalies.saturating_sub(selected.len());
    let seeds = normals.select_rows(&selected);
    let offspring = if n_smote > 0 {
        let k = config.smote_k.min(seeds.rows().saturating_sub(1)).max(1);
        smote_oversample(&seeds, k, n_smote, &mut rng)?
    } else {
        Matrix::zeros(0, normals.cols())
    };
    let anomalies = gaussian_perturb(&seeds.vstack(&offspring)?, config.noise_sigma, &mut rng)?;

    let features = normals.select_rows(&remaining).vstack(&anomalies)?;
    let mut provenance = vec![Provenance::OriginalNormal; remaining.len()];
    provenance.extend(std::iter::repeat_n(Provenance::SelectedSeed, seeds.rows()));
    provenance.extend(std::iter::repeat_n(Provenance::SmoteSynthetic, offspring.rows()));

    let order = rng.permutation(features.rows());
    let features = features.select_rows(&order);
    let provenance: Vec<Provenance> = order.iter().map(|&i| provenance[i]).collect();
    let labels = provenance.iter().map(|p| p.label()).collect();
    Ok(LabeledTrainingSet {
        features,
        labels,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::stats;

    fn grid(n: usize, d: usize) -> Matrix<f64> {
        Matrix::from_fn(n, d, |r, c| ((r * 31 + c * 7) % 97) as f64 / 97.0)
    }

    #[test]
    fn seed_subset_sizes() {
        let mut rng = Rng::new(1);
        let (sel, rest) = select_seed_subset(10_000, 0.02, &mut rng).unwrap();
        assert_eq!((sel.len(), rest.len()), (200, 9800));
        let (sel, rest) = select_seed_subset(50, 0.02, &mut rng).unwrap();
        assert_eq!((sel.len(), rest.len()), (1, 49));
        assert!(select_seed_subset(10, 0.0, &mut rng).is_err());
        assert!(select_seed_subset(1, 0.5, &mut rng).is_err());
    }

    #[test]
    fn seed_subset_is_deterministic() {
        let a = select_seed_subset(500, 0.1, &mut Rng::new(4)).unwrap();
        let b = select_seed_subset(500, 0.1, &mut Rng::new(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn smote_midpoint() {
        let seeds = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let (out, _) = smote_with(&seeds, 1, 1, &mut Rng::new(0), |_| 0.5).unwrap();
        assert_eq!(out.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn smote_two_seed_points_stay_on_segment() {
        let seeds = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let out = smote_oversample(&seeds, 1, 200, &mut Rng::new(3)).unwrap();
        for row in out.row_iter() {
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(row[0], row[1]);
        }
    }

    #[test]
    fn smote_argument_errors() {
        let one = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(smote_oversample(&one, 1, 3, &mut Rng::new(0)).is_err());
        let two = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(smote_oversample(&two, 2, 3, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn smote_offspring_are_convex_combinations_of_neighbours() {
        let seeds = grid(30, 4);
        let k = 3;
        let neighbours = nearest_neighbours(&seeds, k);
        let (out, draws) = smote_oversample_traced(&seeds, k, 100, &mut Rng::new(8)).unwrap();
        for (row, draw) in out.row_iter().zip(&draws) {
            assert!(neighbours[draw.base].contains(&draw.neighbour));
            assert!((0.0..=1.0).contains(&draw.t));
            let (a, b) = (seeds.row(draw.base), seeds.row(draw.neighbour));
            for j in 0..4 {
                assert!((row[j] - (a[j] + draw.t * (b[j] - a[j]))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perturb_degenerate_and_deterministic() {
        let x = grid(10, 3);
        assert_eq!(gaussian_perturb(&x, 0.0, &mut Rng::new(1)).unwrap(), x);
        let a = gaussian_perturb(&x, 0.5, &mut Rng::new(2)).unwrap();
        let b = gaussian_perturb(&x, 0.5, &mut Rng::new(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, x);
        assert!(gaussian_perturb(&x, -1.0, &mut Rng::new(2)).is_err());
    }

    #[test]
    fn perturbation_moments() {
        let x = Matrix::<f64>::zeros(1000, 100);
        let y = gaussian_perturb(&x, 1.0, &mut Rng::new(77)).unwrap();
        let m = stats::mean(y.as_slice());
        let s = stats::std_dev(y.as_slice());
        assert!(m.abs() < 0.02, "{m}");
        assert!((s - 1.0).abs() < 0.02, "{s}");
    }

    #[test]
    fn anomaly_count_arithmetic() {
        assert_eq!(anomaly_count(9800, 0.05), 516);
        assert!((515.0f64..516.0).contains(&(0.05 * 9800.0 / 0.95)));
    }

    #[test]
    fn ten_thousand_normals_give_516_anomalies() {
        let normals = grid(10_000, 3);
        let cfg = LabelGenConfig {
            seed: 1,
            ..LabelGenConfig::default()
        };
        let ts = build_training_set(&normals, &cfg).unwrap();
        assert_eq!(ts.len(), 10_316);
        assert_eq!(ts.count(Provenance::OriginalNormal), 9800);
        assert_eq!(ts.count(Provenance::SelectedSeed), 200);
        assert_eq!(ts.count(Provenance::SmoteSynthetic), 316);
        assert_eq!(ts.n_anomalies(), 516);
        assert!((ts.anomaly_fraction() - 516.0 / 10_316.0).abs() < 1e-15);
        assert!((ts.anomaly_fraction() - 0.05002).abs() < 1e-5);
        for (l, p) in ts.labels.iter().zip(&ts.provenance) {
            assert_eq!(*l, p.label());
        }
    }

    #[test]
    fn seeds_alone_reaching_target_need_no_smote() {
        // 100 rows, 5% seeds -> 95 remaining; 5/(95+5) = 5% exactly.
        let normals = grid(100, 2);
        let cfg = LabelGenConfig {
            subset_fraction: 0.05,
            target_anomaly_fraction: 0.05 + 1e-12,
            ..LabelGenConfig::default()
        };
        // target must exceed subset, so nudge it by a hair: the count still rounds to 5
        let ts = build_training_set(&normals, &cfg).unwrap();
        assert_eq!(ts.count(Provenance::SelectedSeed), 5);
        assert_eq!(ts.count(Provenance::SmoteSynthetic), 0);
    }

    #[test]
    fn zero_noise_without_smote_is_relabelled_permutation() {
        let normals = grid(100, 2);
        let cfg = LabelGenConfig {
            subset_fraction: 0.05,
            target_anomaly_fraction: 0.05 + 1e-12,
            noise_sigma: 0.0,
            ..LabelGenConfig::default()
        };
        let ts = build_training_set(&normals, &cfg).unwrap();
        let key = |r: &[f64]| (r[0].to_bits(), r[1].to_bits());
        let mut a: Vec<_> = ts.features.row_iter().map(key).collect();
        let mut b: Vec<_> = normals.row_iter().map(key).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let base = LabelGenConfig::default();
        assert!(base.validate().is_ok());
        for bad in [
            LabelGenConfig { subset_fraction: 0.06, ..base.clone() },
            LabelGenConfig { target_anomaly_fraction: 0.6, ..base.clone() },
            LabelGenConfig { noise_sigma: -0.1, ..base.clone() },
            LabelGenConfig { smote_k: 0, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
