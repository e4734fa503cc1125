//! Fully connected layer: `y = activation(x · W + b)`.
//!
//! `W` is stored `fan_in x fan_out` so a batch of row vectors multiplies on
//! the left. `forward` caches its input and pre-activation; `backward` reads
//! the cache and returns gradients without touching the parameters.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::rng::Rng;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Sigmoid => x.sigmoid(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    #[inline]
    fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
struct Cache<T> {
    input: Matrix<T>,
    pre: Matrix<T>,
    out: Matrix<T>,
}

#[derive(Debug, Clone)]
pub struct DenseLayer<T> {
    weight: Matrix<T>,
    bias: Vec<T>,
    activation: Activation,
    cache: Option<Cache<T>>,
}

impl<T: Scalar> PartialEq for DenseLayer<T> {
    /// Parameters and activation only; the forward cache is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.weight == other.weight && self.bias == other.bias && self.activation == other.activation
    }
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(weight: Matrix<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if weight.rows() == 0 || weight.cols() == 0 {
            return Err(Error::arg(format!("layer dimensions must be positive, got {}", weight.shape_str())));
        }
        if bias.len() != weight.cols() {
            return Err(Error::dims("layer bias", weight.cols(), bias.len()));
        }
        Ok(Self {
            weight,
            bias,
            activation,
            cache: None,
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn init(rng: &mut Rng, fan_in: usize, fan_out: usize, activation: Activation) -> Result<Self> {
        if fan_in == 0 || fan_out == 0 {
            return Err(Error::arg(format!(
                "layer dimensions must be positive, got fan_in={fan_in}, fan_out={fan_out}"
            )));
        }
        let limit = glorot_limit::<T>(fan_in, fan_out);
        let weight = Matrix::from_fn(fan_in, fan_out, |_, _| rng.uniform_range(-limit, limit));
        Self::new(weight, vec![T::zero(); fan_out], activation)
    }

    #[inline]
    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    #[inline]
    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self) -> &Matrix<T> {
        &self.weight
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weight.rows() * self.weight.cols() + self.bias.len()
    }

    /// Weight then bias, as mutable flat slices.
    pub fn params_mut(&mut self) -> [&mut [T]; 2] {
        [self.weight.as_mut_slice(), &mut self.bias]
    }

    pub fn params(&self) -> [&[T]; 2] {
        [self.weight.as_slice(), &self.bias]
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    /// Forward pass without caching.
    pub fn apply(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        let pre = self.pre_activation(input)?;
        Ok(pre.map(|x| self.activation.apply(x)))
    }

    pub fn forward(&mut self, input: &Matrix<T>) -> Result<Matrix<T>> {
        let pre = self.pre_activation(input)?;
        let out = pre.map(|x| self.activation.apply(x));
        self.cache = Some(Cache {
            input: input.clone(),
            pre,
            out: out.clone(),
        });
        Ok(out)
    }

    fn pre_activation(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        if input.cols() != self.fan_in() {
            return Err(Error::dims(
                "dense layer input",
                format!("n x {} (weight {})", self.fan_in(), self.weight.shape_str()),
                input.shape_str(),
            ));
        }
        let mut pre = input.matmul(&self.weight)?;
        pre.add_row_vector(&self.bias)?;
        Ok(pre)
    }

    /// Gradients given `dL/d(output)`. Returns parameter gradients and `dL/d(input)`.
    pub fn backward(&self, upstream: &Matrix<T>) -> Result<(LayerGrads<T>, Matrix<T>)> {
        let cache = self.cache()?;
        if upstream.shape() != cache.out.shape() {
            return Err(Error::dims("dense layer upstream gradient", cache.out.shape_str(), upstream.shape_str()));
        }
        let act = self.activation;
        let mut grad_pre = upstream.clone();
        for ((g, &x), &y) in grad_pre
            .as_mut_slice()
            .iter_mut()
            .zip(cache.pre.as_slice())
            .zip(cache.out.as_slice())
        {
            *g *= act.derivative(x, y);
        }
        self.backward_from_pre(&grad_pre)
    }

    /// Gradients given `dL/d(pre-activation)` directly, bypassing the activation
    /// derivative. Used where the loss is fused with the output sigmoid.
    pub fn backward_from_pre(&self, grad_pre: &Matrix<T>) -> Result<(LayerGrads<T>, Matrix<T>)> {
        let cache = self.cache()?;
        if grad_pre.shape() != cache.pre.shape() {
            return Err(Error::dims("dense layer pre-activation gradient", cache.pre.shape_str(), grad_pre.shape_str()));
        }
        let weight = cache.input.t_matmul(grad_pre)?;
        let bias = grad_pre.column_sums();
        let input_grad = grad_pre.matmul_t(&self.weight)?;
        Ok((LayerGrads { weight, bias }, input_grad))
    }

    fn cache(&self) -> Result<&Cache<T>> {
        self.cache
            .as_ref()
            .ok_or_else(|| Error::State("backward called before forward".into()))
    }
}

pub fn glorot_limit<T: Scalar>(fan_in: usize, fan_out: usize) -> T {
    (T::lit(6.0) / T::from_usize_lossy(fan_in + fan_out)).sqrt()
}

/// Runs a stack of layers, caching each.
pub fn forward_stack<T: Scalar>(layers: &mut [DenseLayer<T>], input: &Matrix<T>) -> Result<Matrix<T>> {
    let mut x = input.clone();
    for layer in layers.iter_mut() {
        x = layer.forward(&x)?;
    }
    Ok(x)
}

pub fn apply_stack<T: Scalar>(layers: &[DenseLayer<T>], input: &Matrix<T>) -> Result<Matrix<T>> {
    let mut x = input.clone();
    for layer in layers {
        x = layer.apply(&x)?;
    }
    Ok(x)
}

/// Backpropagates through a cached stack. Gradients come back in layer order.
pub fn backward_stack<T: Scalar>(
    layers: &[DenseLayer<T>],
    upstream: &Matrix<T>,
) -> Result<(Vec<LayerGrads<T>>, Matrix<T>)> {
    let mut grads = Vec::with_capacity(layers.len());
    let mut g = upstream.clone();
    for layer in layers.iter().rev() {
        let (lg, input_grad) = layer.backward(&g)?;
        grads.push(lg);
        g = input_grad;
    }
    grads.reverse();
    Ok((grads, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn identity_layer_is_identity_map() {
        let mut l = DenseLayer::new(Matrix::identity(2), vec![0.0; 2], Activation::Identity).unwrap();
        assert_eq!(l.forward(&row(&[1.0, 2.0])).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn activations_on_known_points() {
        let mut relu = DenseLayer::new(Matrix::identity(3), vec![0.0; 3], Activation::Relu).unwrap();
        assert_eq!(relu.forward(&row(&[-1.0, 0.0, 3.0])).unwrap().as_slice(), &[0.0, 0.0, 3.0]);
        let mut sig = DenseLayer::new(Matrix::identity(1), vec![0.0], Activation::Sigmoid).unwrap();
        assert_eq!(sig.forward(&row(&[0.0])).unwrap().as_slice(), &[0.5]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let mut l = DenseLayer::<f64>::new(Matrix::zeros(3, 2), vec![0.0; 2], Activation::Relu).unwrap();
        let msg = l.forward(&row(&[1.0, 2.0])).unwrap_err().to_string();
        assert!(msg.contains("3x2") && msg.contains("1x2"), "{msg}");
    }

    #[test]
    fn single_unit_chain_rule() {
        let mut l = DenseLayer::new(Matrix::from_vec(1, 1, vec![3.0]).unwrap(), vec![0.0], Activation::Identity).unwrap();
        l.forward(&row(&[2.0])).unwrap();
        let (g, dx) = l.backward(&row(&[1.0])).unwrap();
        assert_eq!(g.weight.as_slice(), &[2.0]);
        assert_eq!(g.bias, vec![1.0]);
        assert_eq!(dx.as_slice(), &[3.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = Rng::new(1);
        let mut l = DenseLayer::<f64>::init(&mut rng, 3, 4, Activation::Sigmoid).unwrap();
        let x = Matrix::from_fn(5, 3, |r, c| (r as f64) - (c as f64));
        l.forward(&x).unwrap();
        let (g, dx) = l.backward(&Matrix::zeros(5, 4)).unwrap();
        assert!(g.weight.as_slice().iter().chain(&g.bias).chain(dx.as_slice()).all(|&v| v == 0.0));
    }

    #[test]
    fn backward_without_forward_is_state_error() {
        let l = DenseLayer::<f64>::new(Matrix::zeros(1, 1), vec![0.0], Activation::Identity).unwrap();
        assert!(matches!(l.backward(&row(&[1.0])), Err(Error::State(_))));
    }

    #[test]
    fn backward_leaves_parameters_unchanged() {
        let mut rng = Rng::new(9);
        let mut l = DenseLayer::<f64>::init(&mut rng, 3, 2, Activation::Relu).unwrap();
        let before = l.clone();
        l.forward(&Matrix::from_fn(4, 3, |r, c| (r + c) as f64 * 0.1)).unwrap();
        l.backward(&Matrix::from_fn(4, 2, |_, _| 1.0)).unwrap();
        assert_eq!(l, before);
    }

    #[test]
    fn glorot_bound_and_zero_bias() {
        let mut rng = Rng::new(5);
        let l = DenseLayer::<f64>::init(&mut rng, 32, 16, Activation::Relu).unwrap();
        let bound = (6.0f64 / 48.0).sqrt();
        assert!((bound - 0.353_553).abs() < 1e-6);
        assert!(l.weight().as_slice().iter().all(|w| w.abs() <= bound));
        assert!(l.bias().iter().all(|&b| b == 0.0));
        let again = DenseLayer::<f64>::init(&mut Rng::new(5), 32, 16, Activation::Relu).unwrap();
        assert_eq!(l, again);
        assert!(DenseLayer::<f64>::init(&mut rng, 0, 4, Activation::Relu).is_err());
    }
}
