//! Classical unsupervised detectors used as comparison points.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::math::matrix::{dot, squared_distance};
use crate::math::Matrix;
use crate::scalar::Scalar;

/// Distance to the k-th nearest training row.
#[derive(Debug, Clone)]
pub struct KnnDetector<T> {
    k: usize,
    train: Matrix<T>,
}

impl<T: Scalar> KnnDetector<T> {
    pub const DEFAULT_K: usize = 5;

    pub fn fit(train: &Matrix<T>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("k must be at least 1"));
        }
        if k >= train.rows() {
            return Err(Error::arg(format!("k = {k} needs more than {} training rows", train.rows())));
        }
        Ok(Self {
            k,
            train: train.clone(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Out-of-sample scores: every training row is a candidate neighbour.
    pub fn score(&self, query: &Matrix<T>) -> Result<Vec<T>> {
        self.check_width(query)?;
        Ok(query.row_iter().map(|q| self.kth_distance(q, None)).collect())
    }

    /// In-sample scores for the training rows, skipping each row's self-match.
    pub fn score_training(&self) -> Vec<T> {
        self.train
            .row_iter()
            .enumerate()
            .map(|(i, q)| self.kth_distance(q, Some(i)))
            .collect()
    }

    fn check_width(&self, query: &Matrix<T>) -> Result<()> {
        if query.cols() != self.train.cols() {
            return Err(Error::dims("knn query width", self.train.cols(), query.cols()));
        }
        Ok(())
    }

    fn kth_distance(&self, q: &[T], skip: Option<usize>) -> T {
        let mut d: Vec<T> = self
            .train
            .row_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, r)| squared_distance(q, r))
            .collect();
        let (_, kth, _) = d.select_nth_unstable_by(self.k - 1, |a, b| a.partial_cmp(b).expect("finite distances"));
        kth.sqrt()
    }
}

/// Squared residual after projecting onto the leading principal axes.
#[derive(Debug, Clone)]
pub struct PcaDetector<T> {
    means: Vec<T>,
    /// One orthonormal axis per row, by decreasing explained variance.
    axes: Matrix<T>,
    explained_variance: Vec<T>,
}

impl<T: Scalar> PcaDetector<T> {
    /// Eigendecomposition of the population covariance of `train`.
    pub fn fit(train: &Matrix<T>, n_components: usize) -> Result<Self> {
        let (n, d) = train.shape();
        if n_components == 0 || n_components > d {
            return Err(Error::arg(format!("n_components must lie in 1..={d}, got {n_components}")));
        }
        if n == 0 {
            return Err(Error::arg("cannot fit PCA on zero rows"));
        }
        let nf = T::from_usize_lossy(n);
        let means: Vec<T> = train.column_sums().into_iter().map(|s| s / nf).collect();
        let mut cov = DMatrix::<f64>::zeros(d, d);
        let mut centered = vec![0.0f64; d];
        for row in train.row_iter() {
            for ((c, &x), &m) in centered.iter_mut().zip(row).zip(&means) {
                *c = (x - m).to_f64_lossy();
            }
            for i in 0..d {
                for j in i..d {
                    cov[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / n as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("finite eigenvalues")
                .then(a.cmp(&b))
        });
        let axes = Matrix::from_fn(n_components, d, |c, j| T::lit(eig.eigenvectors[(j, order[c])]));
        let explained_variance = order[..n_components]
            .iter()
            .map(|&i| T::lit(eig.eigenvalues[i].max(0.0)))
            .collect();
        Ok(Self {
            means,
            axes,
            explained_variance,
        })
    }

    pub fn n_components(&self) -> usize {
        self.axes.rows()
    }

    pub fn axes(&self) -> &Matrix<T> {
        &self.axes
    }

    pub fn explained_variance(&self) -> &[T] {
        &self.explained_variance
    }

    pub fn score(&self, query: &Matrix<T>) -> Result<Vec<T>> {
        if query.cols() != self.means.len() {
            return Err(Error::dims("pca query width", self.means.len(), query.cols()));
        }
        let d = self.means.len();
        let mut centered = vec![T::zero(); d];
        let mut residual = vec![T::zero(); d];
        Ok(query
            .row_iter()
            .map(|row| {
                for ((c, &x), &m) in centered.iter_mut().zip(row).zip(&self.means) {
                    *c = x - m;
                }
                residual.copy_from_slice(&centered);
                for axis in self.axes.row_iter() {
                    let coef = dot(&centered, axis);
                    for (r, &a) in residual.iter_mut().zip(axis) {
                        *r -= coef * a;
                    }
                }
                residual.iter().map(|&r| r * r).sum()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;

    fn line(v: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn knn_examples() {
        let det = KnnDetector::fit(&line(&[0.0, 10.0]), 1).unwrap();
        let s = det.score(&line(&[0.1, 10.0])).unwrap();
        assert!((s[0] - 0.1).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
        assert_eq!(det.score_training(), vec![10.0, 10.0]);
        assert!(KnnDetector::fit(&line(&[0.0, 1.0]), 2).is_err());
        assert!(det.score(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn knn_matches_exhaustive_oracle() {
        let mut rng = Rng::new(21);
        let train = Matrix::from_fn(200, 3, |_, _| rng.uniform_range(-1.0, 1.0));
        let mut query = Matrix::from_fn(50, 3, |_, _| rng.uniform_range(-1.0, 1.0));
        query.row_mut(7).copy_from_slice(&[25.0, -30.0, 40.0]);
        let det = KnnDetector::fit(&train, 5).unwrap();
        let scores = det.score(&query).unwrap();
        for (q, &s) in query.row_iter().zip(&scores) {
            let mut all: Vec<f64> = train
                .row_iter()
                .map(|t| q.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((all[4] - s).abs() < 1e-12);
        }
        let top = (0..50).max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap()).unwrap();
        assert_eq!(top, 7);
    }

    #[test]
    fn pca_line_and_full_rank() {
        let pts: Vec<[f64; 2]> = (0..20).map(|i| [i as f64 * 0.3 - 2.0, 2.0 * (i as f64 * 0.3 - 2.0) + 1.0]).collect();
        let train = Matrix::from_rows(&pts).unwrap();
        let det = PcaDetector::fit(&train, 1).unwrap();
        assert!(det.score(&train).unwrap().iter().all(|&s| s < 1e-18));

        // perpendicular offset of length 2 from the line y = 2x + 1 through (0, 1)
        let normal = [-2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()];
        let off = Matrix::from_rows(&[[2.0 * normal[0], 1.0 + 2.0 * normal[1]]]).unwrap();
        assert!((det.score(&off).unwrap()[0] - 4.0).abs() < 1e-9);

        let mut rng = Rng::new(3);
        let x = Matrix::<f64>::from_fn(40, 4, |_, _| rng.standard_normal());
        let full = PcaDetector::fit(&x, 4).unwrap();
        assert!(full.score(&x).unwrap().iter().all(|&s| s < 1e-18));
        assert!(PcaDetector::fit(&x, 5).is_err());
    }

    #[test]
    fn pca_axes_orthonormal_and_error_monotone() {
        let mut rng = Rng::new(8);
        let x = Matrix::from_fn(100, 5, |r, c| rng.standard_normal::<f64>() * (c + 1) as f64 + r as f64 * 0.01);
        let mut previous = f64::INFINITY;
        for k in 1..=5 {
            let det = PcaDetector::fit(&x, k).unwrap();
            let g = det.axes().matmul_t(det.axes()).unwrap();
            for i in 0..k {
                for j in 0..k {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((g.get(i, j) - expect).abs() < 1e-9);
                }
            }
            let total: f64 = det.score(&x).unwrap().iter().sum();
            assert!(total <= previous + 1e-9);
            previous = total;
        }
    }
}
