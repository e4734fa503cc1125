//! Bias-corrected Adam over a list of flat parameter tensors.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    config: AdamConfig,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    /// Zero accumulators for tensors of the given lengths.
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Result<Self> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::arg(format!("learning rate must be positive, got {}", config.learning_rate)));
        }
        Ok(Self {
            config,
            first: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    /// One update. `params[i]` and `grads[i]` must match the i-th registered shape.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::dims(
                "adam tensor count",
                self.first.len(),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first[i].len() || g.len() != self.first[i].len() {
                return Err(Error::Dimension {
                    context: "adam tensor",
                    expected: format!("{} entries in tensor {i}", self.first[i].len()),
                    actual: format!("{} params / {} grads", p.len(), g.len()),
                });
            }
        }

        self.step += 1;
        let b1 = T::lit(self.config.beta1);
        let b2 = T::lit(self.config.beta2);
        let t = self.step as i32;
        let lr = T::lit(self.config.learning_rate);
        let eps = T::lit(self.config.epsilon);
        let bc1 = T::one() - b1.powi(t);
        let bc2 = T::one() - b2.powi(t);

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = AdamState::<f64>::new(AdamConfig::with_learning_rate(0.1), &[1]).unwrap();
        let mut p = vec![1.0];
        adam.step(&mut [&mut p], &[&[1.0]]).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-6, "{}", p[0]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut adam = AdamState::<f64>::new(AdamConfig::default(), &[3]).unwrap();
        let mut p = vec![0.5, -1.0, 2.0];
        for _ in 0..25 {
            adam.step(&mut [&mut p], &[&[0.0; 3]]).unwrap();
        }
        assert_eq!(p, vec![0.5, -1.0, 2.0]);
        assert_eq!(adam.step_count(), 25);
    }

    #[test]
    fn shape_mismatch_is_rejected_without_stepping() {
        let mut adam = AdamState::<f64>::new(AdamConfig::default(), &[2]).unwrap();
        let mut p = vec![0.0; 3];
        assert!(adam.step(&mut [&mut p], &[&[1.0; 3]]).is_err());
        assert_eq!(adam.step_count(), 0);
        assert!(AdamState::<f64>::new(AdamConfig::with_learning_rate(0.0), &[1]).is_err());
    }
}
