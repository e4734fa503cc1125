use crate::scalar::Scalar;

/// Quantile with linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted sample). `None` for an empty input.
pub fn quantile<T: Scalar>(values: &[T], q: f64) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantile of NaN"));
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len())
}

/// Population standard deviation.
pub fn std_dev<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let m = mean(values);
    let var = values.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::from_usize_lossy(values.len());
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_quartile_interpolates() {
        let q = quantile(&[0.4, 0.1, 0.3, 0.2], 0.75).unwrap();
        assert!((q - 0.325f64).abs() < 1e-15);
        assert_eq!(quantile(&[7.0], 0.75), Some(7.0));
        assert_eq!(quantile::<f64>(&[], 0.75), None);
    }

    #[test]
    fn population_moments() {
        assert_eq!(mean(&[2.0, 4.0]), 3.0);
        assert_eq!(std_dev(&[2.0, 4.0]), 1.0);
    }
}
