use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};

/// Fully connected layer `y = x W + b`, `W` stored `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn xavier(&mut self, rng: &mut impl Rng) {
        let bound = (6.0 / (self.fan_in() + self.fan_out()) as f64).sqrt();
        self.w.mapv_inplace(|_| rng.random_range(-bound..=bound));
        self.b.fill(0.0);
    }

    pub(crate) fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    pub(crate) fn zeros_like(&self) -> Dense {
        Dense::zeros(self.fan_in(), self.fan_out())
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }
}

/// Multilayer perceptron with ReLU on every hidden layer and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
    pub l2_coeff: f64,
}

/// Cached activations of one forward pass: the input of every layer and
/// the pre-activation of every hidden layer.
#[derive(Debug, Clone)]
pub struct MlpTape {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

pub const HIDDEN_DIM: usize = 160;
pub const DEFAULT_L2: f64 = 1e-4;

impl MlpModel {
    /// Zero-initialized network with the given layer widths, input first.
    pub fn new(layer_dims: &[usize], l2_coeff: f64) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::invalid(format!(
                "an MLP needs at least two positive layer widths, got {layer_dims:?}"
            )));
        }
        if !(l2_coeff >= 0.0) {
            return Err(Error::invalid("l2_coeff must be non-negative"));
        }
        let layers = layer_dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(MlpModel { layers, l2_coeff })
    }

    /// The `d-160-160` network used for every branch and head.
    pub fn standard(input_dim: usize, seed: u64) -> Result<Self> {
        let mut m = Self::new(&[input_dim, HIDDEN_DIM, HIDDEN_DIM], DEFAULT_L2)?;
        m.xavier_init(seed);
        Ok(m)
    }

    pub fn from_layers(layers: Vec<Dense>, l2_coeff: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("an MLP needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::DimMismatch {
                    expected: pair[0].fan_out(),
                    found: pair[1].fan_in(),
                });
            }
        }
        for l in &layers {
            if l.b.len() != l.fan_out() {
                return Err(Error::DimMismatch {
                    expected: l.fan_out(),
                    found: l.b.len(),
                });
            }
        }
        Ok(MlpModel { layers, l2_coeff })
    }

    pub fn xavier_init(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut self.layers {
            l.xavier(&mut rng);
        }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].fan_in()];
        dims.extend(self.layers.iter().map(Dense::fan_out));
        dims
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn forward_one(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut h = self.layers[0].forward(x);
        for l in &self.layers[1..] {
            h.mapv_inplace(relu);
            h = l.forward(h.view());
        }
        Ok(h)
    }

    pub fn forward_one_train(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, MlpTape)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let mut h = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let z = l.forward(h.view());
            inputs.push(h);
            if i + 1 < self.layers.len() {
                h = z.mapv(relu);
                pre.push(z);
            } else {
                h = z;
            }
        }
        Ok((h, MlpTape { inputs, pre }))
    }

    /// Gradients for every layer plus the gradient with respect to the input.
    pub fn backward_one(&self, tape: &MlpTape, grad_out: ArrayView2<'_, f64>) -> (Vec<Dense>, Array2<f64>) {
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.to_owned();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let dw = tape.inputs[i].t().dot(&g);
            let db = g.sum_axis(Axis(0));
            grads.push(Dense { w: dw, b: db });
            let mut gin = g.dot(&l.w.t());
            if i > 0 {
                ndarray::Zip::from(&mut gin)
                    .and(&tape.pre[i - 1])
                    .for_each(|gv, &z| {
                        if z <= 0.0 {
                            *gv = 0.0;
                        }
                    });
            }
            g = gin;
        }
        grads.reverse();
        (grads, g)
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    v.max(0.0)
}

impl Network for MlpModel {
    type Tape = MlpTape;

    fn n_inputs(&self) -> usize {
        1
    }

    fn input_dims(&self) -> Vec<usize> {
        vec![self.input_dim()]
    }

    fn output_dim(&self) -> usize {
        MlpModel::output_dim(self)
    }

    fn forward(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<Array2<f64>> {
        match inputs {
            [x] => self.forward_one(*x),
            _ => Err(Error::DimMismatch {
                expected: 1,
                found: inputs.len(),
            }),
        }
    }

    fn forward_train(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<(Array2<f64>, MlpTape)> {
        match inputs {
            [x] => self.forward_one_train(*x),
            _ => Err(Error::DimMismatch {
                expected: 1,
                found: inputs.len(),
            }),
        }
    }

    fn backward(&self, tape: &MlpTape, grad_out: ArrayView2<'_, f64>) -> Vec<Dense> {
        self.backward_one(tape, grad_out).0
    }

    fn params(&self) -> Vec<&Dense> {
        self.layers.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Dense> {
        self.layers.iter_mut().collect()
    }

    fn l2_coeff(&self) -> f64 {
        self.l2_coeff
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub(crate) struct MlpShape {
    pub dims: Vec<usize>,
    pub l2_coeff: f64,
}

impl From<&MlpModel> for MlpShape {
    fn from(m: &MlpModel) -> Self {
        MlpShape {
            dims: m.layer_dims(),
            l2_coeff: m.l2_coeff,
        }
    }
}
