//! The AnoRand network.
//!
//! Two blocks read the same input:
//!
//! ```text
//!            ┌── ffp ──► z1 ──► nd_head ──► y_nd
//!   x ───────┤          │
//!            └── encoder ──► z0
//!                            concat(z0, z1) ──► fusion ──► decoder ──► x̂
//!                                              y_ae = sigmoid(mean((x - x̂)²))
//! ```
//!
//! In semi-supervised mode the loss is `w · BCE(y_nd) + (1 - w) · BCE(y_ae)`.
//! Because `z1` feeds both the head and the concat, the feed-forward block
//! receives gradient from both terms.
//!
//! In supervised mode the prediction head reads the fused latent instead of
//! `z1`, and the loss is `(1 - w) · BCE(head) + w · MAE(x, x̂)`.

mod checkpoint;
mod score;
mod train;

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_SCHEMA_VERSION};
pub use score::{compute_alpha, fused_score, ScoreReport, ALPHA_QUANTILE};
pub use train::{EpochLoss, TrainingHistory};

use crate::error::{Error, Result};
use crate::math::layer::{apply_stack, backward_stack, forward_stack};
use crate::math::{bce_loss, mae, Activation, AdamConfig, AdamState, DenseLayer, LayerGrads, Matrix, Rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SemiSupervised,
    Supervised,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::SemiSupervised => "semi_supervised",
            Mode::Supervised => "supervised",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// Hidden widths of the feed-forward block; the last one is `z1`.
    pub ffp_hidden: Vec<usize>,
    /// Hidden widths of the encoder; the last one is `z0`. The decoder mirrors
    /// the remaining widths back out to `input_dim`.
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Weight of the noise-detector term in the joint loss (MAE weight in
    /// supervised mode).
    pub loss_weight_w: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            ffp_hidden: vec![32, 16],
            encoder_hidden: vec![32, 16],
            latent_dim: 16,
            loss_weight_w: 0.2,
            epochs: 200,
            batch_size: 128,
            learning_rate: 1e-4,
            mode: Mode::SemiSupervised,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims_ok = self.input_dim >= 1
            && self.latent_dim >= 1
            && !self.ffp_hidden.is_empty()
            && !self.encoder_hidden.is_empty()
            && self.ffp_hidden.iter().chain(&self.encoder_hidden).all(|&h| h >= 1);
        if !dims_ok {
            return Err(Error::arg(format!(
                "all layer widths must be at least 1 (input {}, ffp {:?}, encoder {:?}, latent {})",
                self.input_dim, self.ffp_hidden, self.encoder_hidden, self.latent_dim
            )));
        }
        if !(0.0..=1.0).contains(&self.loss_weight_w) {
            return Err(Error::arg(format!("w must lie in [0, 1], got {}", self.loss_weight_w)));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::arg(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }

    fn z1_dim(&self) -> usize {
        *self.ffp_hidden.last().expect("validated")
    }

    fn z0_dim(&self) -> usize {
        *self.encoder_hidden.last().expect("validated")
    }

    fn head_input(&self) -> usize {
        match self.mode {
            Mode::SemiSupervised => self.z1_dim(),
            Mode::Supervised => self.latent_dim,
        }
    }

    fn decoder_widths(&self) -> Vec<usize> {
        let mut widths: Vec<usize> = self.encoder_hidden[..self.encoder_hidden.len() - 1]
            .iter()
            .rev()
            .copied()
            .collect();
        widths.push(self.input_dim);
        widths
    }

    /// `(fan_in, fan_out)` of every layer in parameter order: ffp, head,
    /// encoder, fusion, decoder.
    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        let chain = |start: usize, widths: &[usize], out: &mut Vec<(usize, usize)>| {
            let mut fan_in = start;
            for &w in widths {
                out.push((fan_in, w));
                fan_in = w;
            }
        };
        chain(self.input_dim, &self.ffp_hidden, &mut shapes);
        shapes.push((self.head_input(), 1));
        chain(self.input_dim, &self.encoder_hidden, &mut shapes);
        shapes.push((self.z0_dim() + self.z1_dim(), self.latent_dim));
        chain(self.latent_dim, &self.decoder_widths(), &mut shapes);
        shapes
    }

    /// Trainable scalar count, computed from the configuration alone.
    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|&(i, o)| i * o + o).sum()
    }
}

/// Outputs of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T> {
    /// Noise-detector probability (prediction head output in supervised mode).
    pub y_nd: Vec<T>,
    pub x_hat: Matrix<T>,
    /// `sigmoid(mean squared reconstruction error)` per row.
    pub y_ae: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLoss<T> {
    pub total: T,
    pub ce_nd: T,
    pub ce_ae: T,
}

/// `total = w · ce_nd + (1 - w) · ce_ae`.
pub fn joint_loss<T: Scalar>(y_nd: &[T], y_ae: &[T], targets: &[T], w: f64) -> Result<JointLoss<T>> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::arg(format!("w must lie in [0, 1], got {w}")));
    }
    if y_nd.len() != y_ae.len() {
        return Err(Error::dims("joint loss outputs", y_nd.len(), y_ae.len()));
    }
    let ce_nd = bce_loss(y_nd, targets)?;
    let ce_ae = bce_loss(y_ae, targets)?;
    let w = T::lit(w);
    Ok(JointLoss {
        total: w * ce_nd + (T::one() - w) * ce_ae,
        ce_nd,
        ce_ae,
    })
}

/// Per-row `sigmoid(mean_j (x_ij - x̂_ij)²)`.
pub fn reconstruction_probability<T: Scalar>(x: &Matrix<T>, x_hat: &Matrix<T>) -> Result<Vec<T>> {
    if x.shape() != x_hat.shape() {
        return Err(Error::dims("reconstruction", x.shape_str(), x_hat.shape_str()));
    }
    let d = T::from_usize_lossy(x.cols());
    Ok(x.row_iter()
        .zip(x_hat.row_iter())
        .map(|(a, b)| (crate::math::matrix::squared_distance(a, b) / d).sigmoid())
        .collect())
}

/// Every loss the trainer tracks, for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss<T> {
    /// The objective actually minimized in the current mode.
    pub total: T,
    pub ce_nd: T,
    pub ce_ae: T,
    pub mae: T,
}

/// Parameter gradients in the model's parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub ffp: Vec<LayerGrads<T>>,
    pub head: LayerGrads<T>,
    pub encoder: Vec<LayerGrads<T>>,
    pub fusion: LayerGrads<T>,
    pub decoder: Vec<LayerGrads<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn flat(&self) -> Vec<&[T]> {
        self.ffp
            .iter()
            .chain(std::iter::once(&self.head))
            .chain(&self.encoder)
            .chain(std::iter::once(&self.fusion))
            .chain(&self.decoder)
            .flat_map(|g| [g.weight.as_slice(), g.bias.as_slice()])
            .collect()
    }
}

/// FFP stack, head, encoder stack, fusion layer, decoder stack.
pub(crate) type Parts<'a, T> = (&'a [DenseLayer<T>], &'a DenseLayer<T>, &'a [DenseLayer<T>], &'a DenseLayer<T>, &'a [DenseLayer<T>]);

#[derive(Debug, Clone)]
pub struct AnoRandModel<T> {
    config: ModelConfig,
    ffp: Vec<DenseLayer<T>>,
    head: DenseLayer<T>,
    encoder: Vec<DenseLayer<T>>,
    fusion: DenseLayer<T>,
    decoder: Vec<DenseLayer<T>>,
    optimizer: AdamState<T>,
    alpha: Option<T>,
}

impl<T: Scalar> PartialEq for AnoRandModel<T> {
    /// Configuration, parameters and alpha; optimizer moments are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.ffp == other.ffp
            && self.head == other.head
            && self.encoder == other.encoder
            && self.fusion == other.fusion
            && self.decoder == other.decoder
            && self.alpha == other.alpha
    }
}

impl<T: Scalar> AnoRandModel<T> {
    /// Fresh Glorot-initialized network. ReLU on every hidden layer, sigmoid on
    /// the head, identity on the reconstruction.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::stream(config.seed, Stream::Init);
        let shapes = config.layer_shapes();
        let mut it = shapes.iter().copied();
        let mut take = |n: usize, last: Activation, rng: &mut Rng| -> Result<Vec<DenseLayer<T>>> {
            (0..n)
                .map(|i| {
                    let (fi, fo) = it.next().expect("layer_shapes covers every layer");
                    let act = if i + 1 == n { last } else { Activation::Relu };
                    DenseLayer::init(rng, fi, fo, act)
                })
                .collect()
        };
        let ffp = take(config.ffp_hidden.len(), Activation::Relu, &mut rng)?;
        let head = take(1, Activation::Sigmoid, &mut rng)?.remove(0);
        let encoder = take(config.encoder_hidden.len(), Activation::Relu, &mut rng)?;
        let fusion = take(1, Activation::Relu, &mut rng)?.remove(0);
        let decoder = take(config.decoder_widths().len(), Activation::Identity, &mut rng)?;
        Self::from_parts(config, ffp, head, encoder, fusion, decoder, None)
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        ffp: Vec<DenseLayer<T>>,
        head: DenseLayer<T>,
        encoder: Vec<DenseLayer<T>>,
        fusion: DenseLayer<T>,
        decoder: Vec<DenseLayer<T>>,
        alpha: Option<T>,
    ) -> Result<Self> {
        config.validate()?;
        let shapes: Vec<(usize, usize)> = ffp
            .iter()
            .chain(std::iter::once(&head))
            .chain(&encoder)
            .chain(std::iter::once(&fusion))
            .chain(&decoder)
            .map(|l| (l.fan_in(), l.fan_out()))
            .collect();
        if shapes != config.layer_shapes() {
            return Err(Error::dims("layer shapes", format!("{:?}", config.layer_shapes()), format!("{shapes:?}")));
        }
        let tensor_sizes: Vec<usize> = shapes.iter().flat_map(|&(i, o)| [i * o, o]).collect();
        let optimizer = AdamState::new(AdamConfig::with_learning_rate(config.learning_rate), &tensor_sizes)?;
        Ok(Self {
            config,
            ffp,
            head,
            encoder,
            fusion,
            decoder,
            optimizer,
            alpha,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Fusion weight fixed after training; `None` before `fit`.
    pub fn alpha(&self) -> Option<T> {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: T) -> Result<()> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::arg(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        self.alpha = Some(alpha);
        Ok(())
    }

    pub fn optimizer(&self) -> &AdamState<T> {
        &self.optimizer
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|l| l.param_count()).sum()
    }

    /// Layers in parameter order.
    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer<T>> {
        self.ffp
            .iter()
            .chain(std::iter::once(&self.head))
            .chain(&self.encoder)
            .chain(std::iter::once(&self.fusion))
            .chain(&self.decoder)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer<T>> {
        self.ffp
            .iter_mut()
            .chain(std::iter::once(&mut self.head))
            .chain(&mut self.encoder)
            .chain(std::iter::once(&mut self.fusion))
            .chain(&mut self.decoder)
    }

    /// Flat parameter tensors (weight, bias per layer) in parameter order.
    pub fn params(&self) -> Vec<&[T]> {
        self.layers().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.layers_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub(crate) fn parts(&self) -> Parts<'_, T> {
        (&self.ffp, &self.head, &self.encoder, &self.fusion, &self.decoder)
    }

    fn check_input(&self, batch: &Matrix<T>) -> Result<()> {
        if batch.cols() != self.config.input_dim {
            return Err(Error::dims(
                "model input",
                format!("n x {}", self.config.input_dim),
                batch.shape_str(),
            ));
        }
        Ok(())
    }

    /// Inference pass; nothing is cached.
    pub fn forward(&self, batch: &Matrix<T>) -> Result<ForwardOutput<T>> {
        self.check_input(batch)?;
        let z1 = apply_stack(&self.ffp, batch)?;
        let z0 = apply_stack(&self.encoder, batch)?;
        let latent = self.fusion.apply(&z0.hstack(&z1)?)?;
        let head_in = match self.config.mode {
            Mode::SemiSupervised => &z1,
            Mode::Supervised => &latent,
        };
        let y_nd = self.head.apply(head_in)?.into_vec();
        let x_hat = apply_stack(&self.decoder, &latent)?;
        let y_ae = reconstruction_probability(batch, &x_hat)?;
        Ok(ForwardOutput { y_nd, x_hat, y_ae })
    }

    /// Loss of the current mode on one batch, plus gradients of that loss with
    /// respect to every parameter. Parameters are not modified.
    pub fn loss_and_gradients(&mut self, batch: &Matrix<T>, targets: &[T]) -> Result<(BatchLoss<T>, Gradients<T>)> {
        self.check_input(batch)?;
        if targets.len() != batch.rows() {
            return Err(Error::dims("targets", batch.rows(), targets.len()));
        }
        if batch.rows() == 0 {
            return Err(Error::arg("empty batch"));
        }
        let n = T::from_usize_lossy(batch.rows());
        let d = T::from_usize_lossy(batch.cols());
        let w = T::lit(self.config.loss_weight_w);
        let mode = self.config.mode;

        let z1 = forward_stack(&mut self.ffp, batch)?;
        let z0 = forward_stack(&mut self.encoder, batch)?;
        let concat = z0.hstack(&z1)?;
        let latent = self.fusion.forward(&concat)?;
        let head_out = match mode {
            Mode::SemiSupervised => self.head.forward(&z1)?,
            Mode::Supervised => self.head.forward(&latent)?,
        };
        let x_hat = forward_stack(&mut self.decoder, &latent)?;
        let y_nd = head_out.as_slice();
        let y_ae = reconstruction_probability(batch, &x_hat)?;

        let ce_nd = bce_loss(y_nd, targets)?;
        let ce_ae = bce_loss(&y_ae, targets)?;
        let rec_mae = mae(batch.as_slice(), x_hat.as_slice())?;

        // Weights on the two loss terms.
        let (head_weight, recon_weight) = match mode {
            Mode::SemiSupervised => (w, T::one() - w),
            Mode::Supervised => (T::one() - w, w),
        };
        let total = match mode {
            Mode::SemiSupervised => head_weight * ce_nd + recon_weight * ce_ae,
            Mode::Supervised => head_weight * ce_nd + recon_weight * rec_mae,
        };

        // d(BCE ∘ sigmoid)/d(pre-activation) = (p - t) / n
        let head_grad_pre = Matrix::from_vec(
            batch.rows(),
            1,
            y_nd.iter().zip(targets).map(|(&p, &t)| head_weight * (p - t) / n).collect(),
        )?;
        let (head_grads, head_input_grad) = self.head.backward_from_pre(&head_grad_pre)?;

        let mut x_hat_grad = Matrix::zeros(batch.rows(), batch.cols());
        match mode {
            Mode::SemiSupervised => {
                let two = T::lit(2.0);
                for r in 0..batch.rows() {
                    // dL/d(mse_r) through sigmoid and BCE
                    let g_mse = recon_weight * (y_ae[r] - targets[r]) / n;
                    let scale = g_mse * two / d;
                    for ((g, &x), &xh) in x_hat_grad.row_mut(r).iter_mut().zip(batch.row(r)).zip(x_hat.row(r)) {
                        *g = scale * (xh - x);
                    }
                }
            }
            Mode::Supervised => {
                let scale = recon_weight / (n * d);
                for ((g, &x), &xh) in x_hat_grad
                    .as_mut_slice()
                    .iter_mut()
                    .zip(batch.as_slice())
                    .zip(x_hat.as_slice())
                {
                    *g = if xh > x {
                        scale
                    } else if xh < x {
                        -scale
                    } else {
                        T::zero()
                    };
                }
            }
        }
        let (decoder_grads, mut latent_grad) = backward_stack(&self.decoder, &x_hat_grad)?;
        if mode == Mode::Supervised {
            latent_grad = latent_grad.zip_map(&head_input_grad, |a, b| a + b)?;
        }
        let (fusion_grads, concat_grad) = self.fusion.backward(&latent_grad)?;
        let (z0_grad, mut z1_grad) = concat_grad.split_cols(z0.cols())?;
        if mode == Mode::SemiSupervised {
            z1_grad = z1_grad.zip_map(&head_input_grad, |a, b| a + b)?;
        }
        let (encoder_grads, _) = backward_stack(&self.encoder, &z0_grad)?;
        let (ffp_grads, _) = backward_stack(&self.ffp, &z1_grad)?;

        for layer in self.layers_mut() {
            layer.clear_cache();
        }
        Ok((
            BatchLoss {
                total,
                ce_nd,
                ce_ae,
                mae: rec_mae,
            },
            Gradients {
                ffp: ffp_grads,
                head: head_grads,
                encoder: encoder_grads,
                fusion: fusion_grads,
                decoder: decoder_grads,
            },
        ))
    }

    /// Value of the current mode's loss without gradients.
    pub fn loss(&self, batch: &Matrix<T>, targets: &[T]) -> Result<T> {
        let out = self.forward(batch)?;
        let w = self.config.loss_weight_w;
        match self.config.mode {
            Mode::SemiSupervised => Ok(joint_loss(&out.y_nd, &out.y_ae, targets, w)?.total),
            Mode::Supervised => {
                let ce = bce_loss(&out.y_nd, targets)?;
                let m = mae(batch.as_slice(), out.x_hat.as_slice())?;
                let w = T::lit(w);
                Ok((T::one() - w) * ce + w * m)
            }
        }
    }

    /// One Adam update from precomputed gradients.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>) -> Result<()> {
        let flat = grads.flat();
        let Self {
            ffp,
            head,
            encoder,
            fusion,
            decoder,
            optimizer,
            ..
        } = self;
        let mut params: Vec<&mut [T]> = ffp
            .iter_mut()
            .chain(std::iter::once(head))
            .chain(encoder.iter_mut())
            .chain(std::iter::once(fusion))
            .chain(decoder.iter_mut())
            .flat_map(|l| l.params_mut())
            .collect();
        optimizer.step(&mut params, &flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: Mode, w: f64) -> ModelConfig {
        ModelConfig {
            input_dim: 3,
            ffp_hidden: vec![4, 2],
            encoder_hidden: vec![4, 2],
            latent_dim: 2,
            loss_weight_w: w,
            mode,
            seed: 1,
            ..ModelConfig::new(3)
        }
    }

    #[test]
    fn default_config_matches_published_hyperparameters() {
        let c = ModelConfig::new(20);
        assert_eq!(c.ffp_hidden, vec![32, 16]);
        assert_eq!(c.encoder_hidden, vec![32, 16]);
        assert_eq!(c.latent_dim, 16);
        assert_eq!((c.loss_weight_w, c.epochs, c.batch_size, c.learning_rate), (0.2, 200, 128, 1e-4));
    }

    #[test]
    fn param_count_is_function_of_config() {
        for cfg in [ModelConfig::new(20), tiny(Mode::SemiSupervised, 0.2), tiny(Mode::Supervised, 0.2)] {
            let m = AnoRandModel::<f64>::new(cfg.clone()).unwrap();
            assert_eq!(m.param_count(), cfg.param_count());
        }
        // d=20: ffp 20*32+32 + 32*16+16, head 16+1, encoder same as ffp,
        // fusion 32*16+16, decoder 16*32+32 + 32*20+20
        let ffp = 20 * 32 + 32 + 32 * 16 + 16;
        let expect = ffp + 17 + ffp + (32 * 16 + 16) + (16 * 32 + 32) + (32 * 20 + 20);
        assert_eq!(ModelConfig::new(20).param_count(), expect);
    }

    #[test]
    fn forward_shapes_and_ranges() {
        let m = AnoRandModel::<f64>::new(ModelConfig::new(10)).unwrap();
        let mut rng = Rng::new(2);
        let x = Matrix::from_fn(7, 10, |_, _| rng.standard_normal());
        let out = m.forward(&x).unwrap();
        assert_eq!(out.y_nd.len(), 7);
        assert_eq!(out.x_hat.shape(), (7, 10));
        assert_eq!(out.y_ae.len(), 7);
        assert!(out.y_nd.iter().all(|&p| p > 0.0 && p < 1.0));
        assert!(out.y_ae.iter().all(|&p| (0.5..1.0).contains(&p)));
        assert!(m.forward(&Matrix::zeros(2, 9)).is_err());
    }

    #[test]
    fn perfect_reconstruction_gives_half() {
        let x = Matrix::from_fn(3, 4, |r, c| (r + c) as f64);
        assert_eq!(reconstruction_probability(&x, &x).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn joint_loss_weighting() {
        let t = [1.0f64, 0.0];
        let y_nd = [0.7, 0.2];
        let y_ae = [0.6, 0.55];
        let ce_nd = bce_loss(&y_nd, &t).unwrap();
        let ce_ae = bce_loss(&y_ae, &t).unwrap();
        assert_eq!(joint_loss(&y_nd, &y_ae, &t, 1.0).unwrap().total, ce_nd);
        assert_eq!(joint_loss(&y_nd, &y_ae, &t, 0.0).unwrap().total, ce_ae);
        let l = joint_loss(&y_nd, &y_ae, &t, 0.2).unwrap();
        assert!((l.total - (0.2 * ce_nd + 0.8 * ce_ae)).abs() < 1e-15);
        assert!(joint_loss(&y_nd, &y_ae[..1], &t, 0.2).is_err());
        assert!(joint_loss(&y_nd, &y_ae, &t, 1.5).is_err());
    }

    #[test]
    fn joint_loss_arithmetic_example() {
        // ce_nd = 1.0, ce_ae = 0.5 -> 0.2 * 1.0 + 0.8 * 0.5 = 0.6
        let (ce_nd, ce_ae) = (1.0f64, 0.5f64);
        let y_nd = [(-ce_nd).exp()];
        let y_ae = [(-ce_ae).exp()];
        let l = joint_loss(&y_nd, &y_ae, &[1.0], 0.2).unwrap();
        assert!((l.total - 0.6).abs() < 1e-12, "{}", l.total);
    }

    #[test]
    fn w_one_zeroes_autoencoder_gradients() {
        let mut m = AnoRandModel::<f64>::new(tiny(Mode::SemiSupervised, 1.0)).unwrap();
        let mut rng = Rng::new(4);
        let x = Matrix::from_fn(5, 3, |_, _| rng.uniform_range(-1.0, 1.0));
        let t = [0.0, 1.0, 0.0, 1.0, 0.0];
        let (_, g) = m.loss_and_gradients(&x, &t).unwrap();
        let zero = |gs: &[LayerGrads<f64>]| {
            gs.iter().all(|g| g.weight.as_slice().iter().chain(&g.bias).all(|&v| v == 0.0))
        };
        assert!(zero(&g.encoder));
        assert!(zero(&g.decoder));
        assert!(zero(std::slice::from_ref(&g.fusion)));
        let ffp_norm: f64 = g.ffp.iter().flat_map(|g| g.weight.as_slice().iter().chain(&g.bias)).map(|v| v.abs()).sum();
        assert!(ffp_norm > 0.0);
    }

    #[test]
    fn gradient_pass_leaves_parameters_untouched() {
        let mut m = AnoRandModel::<f64>::new(tiny(Mode::SemiSupervised, 0.2)).unwrap();
        let before = m.clone();
        let x = Matrix::from_fn(5, 3, |r, c| (r as f64 - c as f64) * 0.3);
        m.loss_and_gradients(&x, &[0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn supervised_w_zero_is_pure_bce() {
        let mut m = AnoRandModel::<f64>::new(tiny(Mode::Supervised, 0.0)).unwrap();
        let x = Matrix::from_fn(4, 3, |r, c| (r * c) as f64 * 0.1);
        let t = [0.0, 1.0, 1.0, 0.0];
        let (loss, _) = m.loss_and_gradients(&x, &t).unwrap();
        assert_eq!(loss.total, loss.ce_nd);
        assert_eq!(m.loss(&x, &t).unwrap(), loss.total);
    }
}
