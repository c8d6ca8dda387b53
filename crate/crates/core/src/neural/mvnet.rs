use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::mlp::{Dense, MlpModel, MlpTape, HIDDEN_DIM};
use super::Network;
use crate::error::{Error, Result};

/// `M` independent branch MLPs, one per view, whose outputs are
/// concatenated and fed to a head MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct MvNetModel {
    branches: Vec<MlpModel>,
    head: MlpModel,
}

#[derive(Debug, Clone)]
pub struct MvNetTape {
    branches: Vec<MlpTape>,
    head: MlpTape,
}

impl MvNetModel {
    pub fn new(branches: Vec<MlpModel>, head: MlpModel) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::invalid("MVnet needs at least one branch"));
        }
        let concat: usize = branches.iter().map(MlpModel::output_dim).sum();
        if head.input_dim() != concat {
            return Err(Error::DimMismatch {
                expected: concat,
                found: head.input_dim(),
            });
        }
        Ok(MvNetModel { branches, head })
    }

    /// `d_j-160-160` branches and a `160M-160-160` head, Xavier-initialized.
    pub fn standard(view_dims: &[usize], seed: u64) -> Result<Self> {
        let branches = view_dims
            .iter()
            .enumerate()
            .map(|(j, &d)| MlpModel::standard(d, branch_seed(seed, j)))
            .collect::<Result<Vec<_>>>()?;
        let head = MlpModel::standard(HIDDEN_DIM * view_dims.len(), branch_seed(seed, view_dims.len()))?;
        Self::new(branches, head)
    }

    /// Zero-initialized network with custom widths, mostly for tests.
    pub fn with_dims(view_dims: &[usize], branch_hidden: &[usize], head_hidden: &[usize], l2: f64) -> Result<Self> {
        let branches = view_dims
            .iter()
            .map(|&d| {
                let mut dims = vec![d];
                dims.extend_from_slice(branch_hidden);
                MlpModel::new(&dims, l2)
            })
            .collect::<Result<Vec<_>>>()?;
        let concat: usize = branches.iter().map(MlpModel::output_dim).sum();
        let mut dims = vec![concat];
        dims.extend_from_slice(head_hidden);
        Self::new(branches, MlpModel::new(&dims, l2)?)
    }

    pub fn xavier_init(&mut self, seed: u64) {
        let m = self.branches.len();
        for (j, b) in self.branches.iter_mut().enumerate() {
            b.xavier_init(branch_seed(seed, j));
        }
        self.head.xavier_init(branch_seed(seed, m));
    }

    pub fn set_l2_coeff(&mut self, l2: f64) {
        for b in &mut self.branches {
            b.l2_coeff = l2;
        }
        self.head.l2_coeff = l2;
    }

    pub fn branches(&self) -> &[MlpModel] {
        &self.branches
    }

    pub fn branches_mut(&mut self) -> &mut [MlpModel] {
        &mut self.branches
    }

    pub fn head(&self) -> &MlpModel {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut MlpModel {
        &mut self.head
    }

    pub fn into_parts(self) -> (Vec<MlpModel>, MlpModel) {
        (self.branches, self.head)
    }

    pub fn n_params(&self) -> usize {
        self.branches.iter().map(MlpModel::n_params).sum::<usize>() + self.head.n_params()
    }

    /// Concatenated branch outputs, i.e. the head's input.
    pub fn branch_latent(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<Array2<f64>> {
        self.check_inputs(inputs)?;
        let outs = self
            .branches
            .iter()
            .zip(inputs)
            .map(|(b, x)| b.forward_one(*x))
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<_> = outs.iter().map(|a| a.view()).collect();
        Ok(concatenate(Axis(1), &views).expect("equal row counts"))
    }

    fn check_inputs(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<()> {
        if inputs.len() != self.branches.len() {
            return Err(Error::DimMismatch {
                expected: self.branches.len(),
                found: inputs.len(),
            });
        }
        let rows = inputs[0].nrows();
        for x in inputs {
            if x.nrows() != rows {
                return Err(Error::LengthMismatch {
                    left: rows,
                    right: x.nrows(),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn branch_seed(seed: u64, j: usize) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(j as u64 + 1))
}

impl Network for MvNetModel {
    type Tape = MvNetTape;

    fn n_inputs(&self) -> usize {
        self.branches.len()
    }

    fn input_dims(&self) -> Vec<usize> {
        self.branches.iter().map(MlpModel::input_dim).collect()
    }

    fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    fn forward(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<Array2<f64>> {
        let z = self.branch_latent(inputs)?;
        self.head.forward_one(z.view())
    }

    fn forward_train(&self, inputs: &[ArrayView2<'_, f64>]) -> Result<(Array2<f64>, MvNetTape)> {
        self.check_inputs(inputs)?;
        let mut outs = Vec::with_capacity(self.branches.len());
        let mut tapes = Vec::with_capacity(self.branches.len());
        for (b, x) in self.branches.iter().zip(inputs) {
            let (o, t) = b.forward_one_train(*x)?;
            outs.push(o);
            tapes.push(t);
        }
        let views: Vec<_> = outs.iter().map(|a| a.view()).collect();
        let z = concatenate(Axis(1), &views).expect("equal row counts");
        let (out, head) = self.head.forward_one_train(z.view())?;
        Ok((out, MvNetTape { branches: tapes, head }))
    }

    fn backward(&self, tape: &MvNetTape, grad_out: ArrayView2<'_, f64>) -> Vec<Dense> {
        let (head_grads, g_concat) = self.head.backward_one(&tape.head, grad_out);
        let mut grads = Vec::new();
        let mut offset = 0;
        for (b, t) in self.branches.iter().zip(&tape.branches) {
            let width = b.output_dim();
            let g = g_concat.slice(s![.., offset..offset + width]);
            grads.extend(b.backward_one(t, g).0);
            offset += width;
        }
        grads.extend(head_grads);
        grads
    }

    fn params(&self) -> Vec<&Dense> {
        self.branches
            .iter()
            .flat_map(|b| b.layers().iter())
            .chain(self.head.layers().iter())
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Dense> {
        let MvNetModel { branches, head } = self;
        branches
            .iter_mut()
            .flat_map(|b| b.layers_mut().iter_mut())
            .chain(head.layers_mut().iter_mut())
            .collect()
    }

    fn l2_coeff(&self) -> f64 {
        self.head.l2_coeff
    }
}
