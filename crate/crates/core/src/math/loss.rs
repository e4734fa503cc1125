//! Batch-mean losses.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probabilities are clamped into `[BCE_EPS, 1 - BCE_EPS]` before the log.
pub const BCE_EPS: f64 = 1e-12;

#[inline]
pub fn clamp_probability<T: Scalar>(p: T) -> T {
    let eps = T::lit(BCE_EPS);
    p.max(eps).min(T::one() - eps)
}

/// Mean binary cross-entropy of `predicted` probabilities against 0/1 `target`.
pub fn bce_loss<T: Scalar>(predicted: &[T], target: &[T]) -> Result<T> {
    if predicted.len() != target.len() {
        return Err(Error::dims("bce lengths", predicted.len(), target.len()));
    }
    if predicted.is_empty() {
        return Err(Error::arg("bce of an empty batch"));
    }
    let sum = predicted.iter().zip(target).fold(T::zero(), |acc, (&p, &y)| {
        let p = clamp_probability(p);
        acc - (y * p.ln() + (T::one() - y) * (T::one() - p).ln())
    });
    Ok(sum / T::from_usize_lossy(predicted.len()))
}

/// Mean absolute error over all entries.
pub fn mae<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::dims("mae lengths", a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::arg("mae of an empty batch"));
    }
    let sum = a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y).abs());
    Ok(sum / T::from_usize_lossy(a.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn bce_known_values() {
        assert!(bce_loss(&[1.0], &[1.0]).unwrap() <= 1e-11);
        assert!((bce_loss(&[0.5], &[1.0]).unwrap() - LN_2).abs() < 1e-15);
        assert!((bce_loss::<f64>(&[0.5, 0.5], &[0.0, 1.0]).unwrap() - LN_2).abs() < 1e-15);
        assert!(bce_loss(&[0.5, 0.5], &[1.0]).is_err());
    }

    #[test]
    fn bce_is_finite_at_saturation() {
        let l: f64 = bce_loss(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(l.is_finite());
        // 1 - (1 - 1e-12) is only ~1e-12 in binary floating point
        assert!((l + (1e-12f64).ln()).abs() < 1e-3);
    }

    #[test]
    fn mae_known_values() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, -2.0], &[0.0, 0.0]).unwrap(), 1.5);
    }
}
