use std::io::Write;

use super::{AnoRandModel, Mode};
use crate::error::{Error, Result};
use crate::math::stats::quantile;
use crate::math::Matrix;
use crate::scalar::Scalar;

/// Quartile used to calibrate the fusion weight.
pub const ALPHA_QUANTILE: f64 = 0.75;

/// `alpha = Q3(y_nd) / (Q3(y_ae) + Q3(y_nd))`, or 0.5 when both quartiles are zero.
pub fn compute_alpha<T: Scalar>(y_nd: &[T], y_ae: &[T]) -> Result<T> {
    let q_nd = quantile(y_nd, ALPHA_QUANTILE).ok_or_else(|| Error::arg("alpha from empty noise-detector scores"))?;
    let q_ae = quantile(y_ae, ALPHA_QUANTILE).ok_or_else(|| Error::arg("alpha from empty reconstruction scores"))?;
    let denom = q_ae + q_nd;
    if denom == T::zero() {
        return Ok(T::lit(0.5));
    }
    Ok(q_nd / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport<T> {
    pub y_nd: Vec<T>,
    pub y_ae: Vec<T>,
    pub y_fused: Vec<T>,
    pub alpha: T,
}

impl<T: Scalar> ScoreReport<T> {
    /// Fuses as `(1 - alpha) · y_nd + alpha · y_ae`.
    pub fn fuse(y_nd: Vec<T>, y_ae: Vec<T>, alpha: T) -> Result<Self> {
        if y_nd.len() != y_ae.len() {
            return Err(Error::dims("score vectors", y_nd.len(), y_ae.len()));
        }
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::arg(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        let y_fused = y_nd
            .iter()
            .zip(&y_ae)
            .map(|(&nd, &ae)| fused_score(nd, ae, alpha))
            .collect();
        Ok(Self {
            y_nd,
            y_ae,
            y_fused,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.y_fused.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_fused.is_empty()
    }

    /// `row_index,y_nd,y_ae,y_fused`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row_index", "y_nd", "y_ae", "y_fused"])?;
        for i in 0..self.len() {
            w.write_record([
                i.to_string(),
                self.y_nd[i].to_f64_lossy().to_string(),
                self.y_ae[i].to_f64_lossy().to_string(),
                self.y_fused[i].to_f64_lossy().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[inline]
pub fn fused_score<T: Scalar>(y_nd: T, y_ae: T, alpha: T) -> T {
    (T::one() - alpha) * y_nd + alpha * y_ae
}

impl<T: Scalar> AnoRandModel<T> {
    /// Scores with an explicit fusion weight.
    pub fn score_with_alpha(&self, data: &Matrix<T>, alpha: T) -> Result<ScoreReport<T>> {
        let out = self.forward(data)?;
        let alpha = match self.config.mode {
            Mode::SemiSupervised => alpha,
            Mode::Supervised => T::zero(),
        };
        ScoreReport::fuse(out.y_nd, out.y_ae, alpha)
    }

    /// Scores with the alpha fixed during training.
    pub fn score(&self, data: &Matrix<T>) -> Result<ScoreReport<T>> {
        let alpha = self
            .alpha
            .ok_or_else(|| Error::State("model has no alpha; train it first".into()))?;
        self.score_with_alpha(data, alpha)
    }

    /// Same result as [`score`](Self::score), computed on row blocks in
    /// `threads` scoped threads.
    pub fn score_parallel(&self, data: &Matrix<T>, threads: usize) -> Result<ScoreReport<T>> {
        let alpha = self
            .alpha
            .ok_or_else(|| Error::State("model has no alpha; train it first".into()))?;
        let threads = threads.max(1);
        let block = data.rows().div_ceil(threads).max(1);
        let blocks: Vec<Vec<usize>> = (0..data.rows())
            .collect::<Vec<_>>()
            .chunks(block)
            .map(<[usize]>::to_vec)
            .collect();
        let parts: Vec<Result<ScoreReport<T>>> = std::thread::scope(|s| {
            let handles: Vec<_> = blocks
                .iter()
                .map(|rows| s.spawn(move || self.score_with_alpha(&data.select_rows(rows), alpha)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("scoring thread panicked")).collect()
        });
        let mut report = ScoreReport {
            y_nd: Vec::with_capacity(data.rows()),
            y_ae: Vec::with_capacity(data.rows()),
            y_fused: Vec::with_capacity(data.rows()),
            alpha,
        };
        for part in parts {
            let part = part?;
            report.alpha = part.alpha;
            report.y_nd.extend(part.y_nd);
            report.y_ae.extend(part.y_ae);
            report.y_fused.extend(part.y_fused);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        // Q3 of a constant vector is that constant
        assert!((compute_alpha(&[0.2; 4], &[0.6; 4]).unwrap() - 0.25f64).abs() < 1e-15);
        assert_eq!(compute_alpha(&[0.3; 3], &[0.3; 3]).unwrap(), 0.5);
        assert_eq!(compute_alpha(&[0.0; 3], &[0.0; 3]).unwrap(), 0.5);
        assert!(compute_alpha::<f64>(&[], &[0.5]).is_err());
    }

    #[test]
    fn fusion_examples() {
        let r = ScoreReport::fuse(vec![0.4], vec![0.8], 0.5).unwrap();
        assert!((r.y_fused[0] - 0.6f64).abs() < 1e-15);
        let r = ScoreReport::fuse(vec![0.4, 0.1], vec![0.8, 0.9], 0.0).unwrap();
        assert_eq!(r.y_fused, r.y_nd);
        let r = ScoreReport::fuse(vec![0.4, 0.1], vec![0.8, 0.9], 1.0).unwrap();
        assert_eq!(r.y_fused, r.y_ae);
        assert!(ScoreReport::fuse(vec![0.4], vec![0.8], 1.5).is_err());
    }

    #[test]
    fn fused_score_increases_with_noise_score() {
        for alpha in [0.0, 0.3, 0.9, 0.999] {
            let lo = fused_score(0.2f64, 0.7, alpha);
            let hi = fused_score(0.2000001f64, 0.7, alpha);
            assert!(hi > lo);
        }
    }
}
