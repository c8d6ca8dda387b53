//! Feed-forward network engine for the two fixed topologies (MLP, MVnet)
//! with hand-derived gradients and momentum SGD.
//!
//! Training minimizes softmax cross-entropy of a linear classifier placed on
//! top of the network output, against the current pseudo-labels, plus an l2
//! penalty on every weight matrix (biases are not penalized).

mod checkpoint;
mod mlp;
mod mvnet;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointModel};
pub use mlp::{Dense, MlpModel, MlpTape, DEFAULT_L2, HIDDEN_DIM};
pub use mvnet::{MvNetModel, MvNetTape};
pub(crate) use mvnet::branch_seed;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trainable network mapping one row per view to a latent row.
pub trait Network: Clone + Send + Sync {
    type Tape;

    fn n_inputs(&self) -> usize;
    fn input_dims(&self) -> Vec<usize>;
    fn output_dim(&self) -> usize;
    fn forward(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<Array2<f64>>;
    fn forward_train(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<(Array2<f64>, Self::Tape)>;
    /// Parameter gradients, aligned with [`Network::params`].
    fn backward(&self, tape: &Self::Tape, grad_out: ArrayView2<'_, f64>) -> Vec<Dense>;
    fn params(&self) -> Vec<&Dense>;
    fn params_mut(&mut self) -> Vec<&mut Dense>;
    fn l2_coeff(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.003,
            momentum: 0.9,
            batch_size: 32,
            epochs: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be a non-negative finite number".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Momentum buffers for a network plus its classifier.
#[derive(Debug, Clone)]
pub struct Momentum {
    model: Vec<Dense>,
    classifier: Dense,
}

impl Momentum {
    pub fn new<N: Network>(model: &N, classifier: &Dense) -> Self {
        Momentum {
            model: model.params().into_iter().map(Dense::zeros_like).collect(),
            classifier: classifier.zeros_like(),
        }
    }
}

/// Loss and all gradients for one batch.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub model: Vec<Dense>,
    pub classifier: Dense,
}

/// `mean CE(softmax(classifier(net(x))), labels) + l2 * sum ||W||^2`.
pub fn loss_and_gradients<N: Network>(
    model: &N,
    classifier: &Dense,
    inputs: &[ArrayView2<'_, f64>],
    labels: &[usize],
) -> Result<Gradients> {
    let batch = labels.len();
    if batch == 0 {
        return Err(Error::invalid("empty batch"));
    }
    for x in inputs {
        if x.nrows() != batch {
            return Err(Error::LengthMismatch {
                left: x.nrows(),
                right: batch,
            });
        }
    }
    if classifier.fan_in() != model.output_dim() {
        return Err(Error::DimMismatch {
            expected: model.output_dim(),
            found: classifier.fan_in(),
        });
    }
    let k = classifier.fan_out();
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!("pseudo-label {bad} outside 0..{k}")));
    }

    let (latent, tape) = model.forward_train(inputs)?;
    let logits = classifier.forward(latent.view());

    // softmax cross-entropy, row-wise with max shift
    let mut grad_logits = Array2::zeros(logits.raw_dim());
    let mut ce = 0.0;
    for ((row, mut g), &y) in logits.outer_iter().zip(grad_logits.outer_iter_mut()).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_denom = denom.ln();
        ce += log_denom - (row[y] - max);
        for (gv, v) in g.iter_mut().zip(row.iter()) {
            *gv = (v - max).exp() / denom;
        }
        g[y] -= 1.0;
    }
    let scale = 1.0 / batch as f64;
    ce *= scale;
    grad_logits *= scale;

    let l2 = model.l2_coeff();
    let penalty: f64 = model
        .params()
        .iter()
        .map(|d| d.w.iter().map(|w| w * w).sum::<f64>())
        .sum::<f64>()
        + classifier.w.iter().map(|w| w * w).sum::<f64>();
    let loss = ce + l2 * penalty;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("non-finite training loss {loss}")));
    }

    let classifier_grad = Dense {
        w: latent.t().dot(&grad_logits) + &(&classifier.w * (2.0 * l2)),
        b: grad_logits.sum_axis(Axis(0)),
    };
    let grad_latent = grad_logits.dot(&classifier.w.t());
    let mut model_grads = model.backward(&tape, grad_latent.view());
    for (g, p) in model_grads.iter_mut().zip(model.params()) {
        g.w.scaled_add(2.0 * l2, &p.w);
    }
    Ok(Gradients {
        loss,
        model: model_grads,
        classifier: classifier_grad,
    })
}

fn momentum_update(param: &mut Dense, velocity: &mut Dense, grad: &Dense, cfg: &TrainConfig) {
    velocity.w *= cfg.momentum;
    velocity.w.scaled_add(-cfg.learning_rate, &grad.w);
    velocity.b *= cfg.momentum;
    velocity.b.scaled_add(-cfg.learning_rate, &grad.b);
    param.w += &velocity.w;
    param.b += &velocity.b;
}

/// One momentum-SGD step on a batch; returns the loss before the update.
pub fn train_step<N: Network>(
    model: &mut N,
    classifier: &mut Dense,
    velocity: &mut Momentum,
    inputs: &[ArrayView2<'_, f64>],
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<f64> {
    let grads = loss_and_gradients(model, classifier, inputs, labels)?;
    for ((p, v), g) in model.params_mut().into_iter().zip(&mut velocity.model).zip(&grads.model) {
        momentum_update(p, v, g, cfg);
    }
    momentum_update(classifier, &mut velocity.classifier, &grads.classifier, cfg);
    Ok(grads.loss)
}

/// Rows `idx` of every view.
pub(crate) fn gather(views: &[ArrayView2<'_, f64>], idx: &[usize]) -> Vec<Array2<f64>> {
    views.iter().map(|v| v.select(Axis(0), idx)).collect()
}

/// Trains `model` for `epochs` passes over shuffled mini-batches with a
/// freshly initialized classifier for `k` classes. Returns the mean loss of
/// the last epoch.
pub fn train_epochs<N: Network>(
    model: &mut N,
    views: &[ArrayView2<'_, f64>],
    labels: &[usize],
    k: usize,
    epochs: usize,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = labels.len();
    let mut classifier = Dense::zeros(model.output_dim(), k.max(1));
    classifier.xavier(rng);
    let mut velocity = Momentum::new(model, &classifier);
    let mut order: Vec<usize> = (0..n).collect();
    let mut last = 0.0;
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch = gather(views, chunk);
            let batch_views: Vec<_> = batch.iter().map(|a| a.view()).collect();
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            total += train_step(model, &mut classifier, &mut velocity, &batch_views, &batch_labels, cfg)?;
            batches += 1;
        }
        last = total / batches.max(1) as f64;
    }
    if !model.params().iter().all(|d| d.is_finite()) {
        return Err(Error::Numeric("weights diverged to non-finite values".into()));
    }
    Ok(last)
}

/// Forward pass over the whole dataset in blocks of rows.
pub fn embed<N: Network>(model: &N, views: &[ArrayView2<'_, f64>]) -> Result<Array2<f64>> {
    const BLOCK: usize = 1024;
    let n = views.first().map_or(0, |v| v.nrows());
    let mut out = Array2::zeros((n, model.output_dim()));
    let mut start = 0;
    while start < n {
        let end = (start + BLOCK).min(n);
        let block: Vec<_> = views.iter().map(|v| v.slice(ndarray::s![start..end, ..])).collect();
        let z = model.forward(&block)?;
        out.slice_mut(ndarray::s![start..end, ..]).assign(&z);
        start = end;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite latent representation".into()));
    }
    Ok(out)
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
