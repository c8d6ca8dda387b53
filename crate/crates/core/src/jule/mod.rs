//! Alternating deep clustering: train the network on the current
//! pseudo-labels, embed the data, merge clusters in the embedding, repeat
//! until the target cluster count is reached.
//!
//! [`run_dmvc`] applies the loop to multi-view data in three ways: on the
//! concatenated views (`cc`), through an MVnet whose branches are pretrained
//! per view and then frozen (`mvnet_fix`), and through an MVnet trained end
//! to end after that initialization (`mvnet`).

pub mod init;
pub mod merge;

pub use init::{init_clusters, nearest_neighbors};
pub use merge::{kernel_bandwidth, merge_clusters, MergeStep};

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{agglomerative_from_distances, Linkage};
use crate::dataset::{concatenate_views, MultiViewDataset, Partition};
use crate::error::{Error, Result};
use crate::metrics::nmi;
use crate::neural::{branch_seed, embed, rng_for, train_epochs, MlpModel, MvNetModel, Network, TrainConfig};

/// How the end-to-end MVnet pass obtains its starting clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndToEnd {
    /// Re-initialize clusters by 1-NN pairing in the unified latent space and
    /// run the full loop again. Retraining on fresh fragments can undo the
    /// class structure the head already found.
    Reinit,
    /// Keep the `mvnet_fix` clusters and only fine-tune on them.
    #[default]
    FineTune,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JuleConfig {
    pub k_target: usize,
    pub shrink_factor: f64,
    pub epochs_per_period: usize,
    pub knn_affinity: usize,
    pub final_finetune: bool,
    pub end_to_end: EndToEnd,
    pub train: TrainConfig,
}

impl Default for JuleConfig {
    fn default() -> Self {
        JuleConfig {
            k_target: 2,
            shrink_factor: 0.9,
            epochs_per_period: 20,
            knn_affinity: 5,
            final_finetune: true,
            end_to_end: EndToEnd::default(),
            train: TrainConfig::default(),
        }
    }
}

impl JuleConfig {
    pub fn new(k_target: usize, seed: u64) -> Self {
        JuleConfig {
            k_target,
            train: TrainConfig {
                seed,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_target == 0 {
            return Err(Error::Config("k_target must be positive".into()));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(Error::Config("shrink_factor must lie in (0, 1)".into()));
        }
        if self.epochs_per_period == 0 || self.knn_affinity == 0 {
            return Err(Error::Config("epochs_per_period and knn_affinity must be positive".into()));
        }
        self.train.validate()
    }
}

/// Cluster count of the next period: `max(K*, ceil(eta K))`, forced below `K`.
pub fn next_k(k: usize, k_target: usize, eta: f64) -> usize {
    let shrunk = (eta * k as f64 - 1e-9).ceil() as usize;
    shrunk.min(k.saturating_sub(1)).max(k_target)
}

/// Full cluster-count schedule from `k0` down to `k_target`.
pub fn k_schedule(k0: usize, k_target: usize, eta: f64) -> Vec<usize> {
    let mut seq = vec![k0];
    let mut k = k0;
    while k > k_target {
        k = next_k(k, k_target, eta);
        seq.push(k);
    }
    seq
}

/// One line of the per-period trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub k: usize,
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
}

/// Loop state at iteration `t`.
#[derive(Debug, Clone)]
pub struct JuleState<N> {
    pub t: usize,
    pub assignments: Partition,
    pub model: N,
    pub latent: Array2<f64>,
}

impl<N> JuleState<N> {
    pub fn k_current(&self) -> usize {
        self.assignments.k()
    }

    /// Merges in the current latent space down to `target_k` clusters.
    pub fn merge_to(&mut self, target_k: usize, k_min: usize, ks: usize) -> Result<Vec<MergeStep>> {
        if target_k >= self.k_current() || target_k < k_min {
            return Err(Error::invalid(format!(
                "merge target {target_k} must lie in {k_min}..{}",
                self.k_current()
            )));
        }
        let (p, steps) = merge_clusters(self.latent.view(), &self.assignments, target_k, ks)?;
        self.assignments = p;
        Ok(steps)
    }
}

#[derive(Debug, Clone)]
pub struct JuleOutcome<N> {
    pub partition: Partition,
    pub latent: Array2<f64>,
    pub model: N,
    pub trace: Vec<TraceRecord>,
    /// `K[t]` for every period, starting with the initial cluster count.
    pub k_sequence: Vec<usize>,
    /// Set when the 1-NN initialization produced fewer than `K*` clusters.
    pub used_fallback_init: bool,
}

fn concat_inputs(views: &[ArrayView2<'_, f64>]) -> Array2<f64> {
    concatenate(Axis(1), views).expect("aligned views")
}

fn fallback_init(views: &[ArrayView2<'_, f64>], k_target: usize) -> Result<Partition> {
    let x = concat_inputs(views);
    let n = x.nrows();
    let k = (k_target * 4).min(n);
    let mut d = crate::cluster::pairwise_sq_euclidean(x.view());
    d.mapv_inplace(f64::sqrt);
    agglomerative_from_distances(d, k, Linkage::Ward)
}

/// Runs the loop for any network. `init` overrides the 1-NN initialization
/// (computed on the concatenated inputs otherwise). `truth`, when given,
/// adds the NMI of every period's partition to the trace.
pub fn run_jule_with<N: Network>(
    views: &[ArrayView2<'_, f64>],
    mut model: N,
    cfg: &JuleConfig,
    init: Option<Partition>,
    truth: Option<&Partition>,
) -> Result<JuleOutcome<N>> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(Error::invalid("no input views"));
    }
    let n = views[0].nrows();
    if cfg.k_target > n {
        return Err(Error::invalid(format!("K* = {} exceeds N = {n}", cfg.k_target)));
    }
    if model.input_dims() != views.iter().map(|v| v.ncols()).collect::<Vec<_>>() {
        return Err(Error::DimMismatch {
            expected: model.input_dims().iter().sum(),
            found: views.iter().map(|v| v.ncols()).sum(),
        });
    }

    let mut used_fallback_init = false;
    let mut y = match init {
        Some(p) => p,
        None => init_clusters(concat_inputs(views).view())?,
    };
    if y.len() != n {
        return Err(Error::LengthMismatch { left: y.len(), right: n });
    }
    if y.k() < cfg.k_target {
        log::warn!(
            "initialization produced {} clusters, fewer than K* = {}; falling back to agglomerative init",
            y.k(),
            cfg.k_target
        );
        y = fallback_init(views, cfg.k_target)?;
        used_fallback_init = true;
    }

    let score = |p: &Partition| truth.map(|t| nmi(t, p)).transpose();
    let mut rng = rng_for(cfg.train.seed, 1);
    let mut trace = Vec::new();
    let mut k_sequence = vec![y.k()];
    let mut t = 0;
    let mut latent;

    while y.k() > cfg.k_target {
        let loss = train_epochs(
            &mut model,
            views,
            y.assignments(),
            y.k(),
            cfg.epochs_per_period,
            &cfg.train,
            &mut rng,
        )?;
        latent = embed(&model, views)?;
        let target = next_k(y.k(), cfg.k_target, cfg.shrink_factor);
        y = merge_clusters(latent.view(), &y, target, cfg.knn_affinity)?.0;
        k_sequence.push(y.k());
        trace.push(TraceRecord {
            t,
            k: y.k(),
            loss,
            nmi: score(&y)?,
        });
        log::debug!("period {t}: K = {}, loss = {loss:.4}", y.k());
        t += 1;
    }

    if cfg.final_finetune {
        let loss = train_epochs(
            &mut model,
            views,
            y.assignments(),
            y.k(),
            cfg.epochs_per_period,
            &cfg.train,
            &mut rng,
        )?;
        trace.push(TraceRecord {
            t,
            k: y.k(),
            loss,
            nmi: score(&y)?,
        });
    }
    latent = embed(&model, views)?;

    Ok(JuleOutcome {
        partition: y,
        latent,
        model,
        trace,
        k_sequence,
        used_fallback_init,
    })
}

/// Single-view loop on the rows of `x` with an MLP.
pub fn run_jule(x: ArrayView2<'_, f64>, model: MlpModel, cfg: &JuleConfig) -> Result<JuleOutcome<MlpModel>> {
    run_jule_with(&[x], model, cfg, None, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmvcVariant {
    Cc,
    MvnetFix,
    Mvnet,
}

impl std::str::FromStr for DmvcVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cc" => Ok(DmvcVariant::Cc),
            "mvnet_fix" | "mvnet-fix" => Ok(DmvcVariant::MvnetFix),
            "mvnet" => Ok(DmvcVariant::Mvnet),
            other => Err(Error::Config(format!(
                "unknown variant {other:?}; expected cc, mvnet_fix or mvnet"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum DmvcModel {
    Mlp(MlpModel),
    MvNet(MvNetModel),
}

#[derive(Debug, Clone)]
pub struct DmvcOutcome {
    pub partition: Partition,
    pub latent: Array2<f64>,
    pub model: DmvcModel,
    /// Named traces: one per pretrained branch, the head, and the final pass.
    pub traces: Vec<(String, Vec<TraceRecord>)>,
}

fn stage_config(cfg: &JuleConfig, stage: u64) -> JuleConfig {
    let mut c = *cfg;
    c.train.seed = branch_seed(cfg.train.seed ^ 0x00C0_FFEE, stage as usize);
    c
}

/// Result of the per-view pretraining plus head training.
struct FixedMvnet {
    net: MvNetModel,
    partition: Partition,
    latent: Array2<f64>,
    traces: Vec<(String, Vec<TraceRecord>)>,
}

fn train_fixed_mvnet(ds: &MultiViewDataset, cfg: &JuleConfig, truth: Option<&Partition>) -> Result<FixedMvnet> {
    let m = ds.n_views();
    let seed = cfg.train.seed;
    let branch_runs = (0..m)
        .into_par_iter()
        .map(|j| {
            let view = ds.view(j).data();
            let model = MlpModel::standard(view.ncols(), branch_seed(seed, j))?;
            let out = run_jule_with(&[view], model, &stage_config(cfg, j as u64), None, truth)?;
            let latent = embed(&out.model, &[view])?;
            Ok((out.model, latent, out.trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut branches = Vec::with_capacity(m);
    let mut latents = Vec::with_capacity(m);
    let mut traces = Vec::with_capacity(m + 1);
    for (j, (model, latent, trace)) in branch_runs.into_iter().enumerate() {
        branches.push(model);
        latents.push(latent);
        traces.push((format!("branch{j}"), trace));
    }
    let latent_views: Vec<_> = latents.iter().map(|a| a.view()).collect();
    let joint = concat_inputs(&latent_views);

    let head = MlpModel::standard(joint.ncols(), branch_seed(seed, m))?;
    let head_run = run_jule_with(&[joint.view()], head, &stage_config(cfg, m as u64), None, truth)?;
    traces.push(("head".to_string(), head_run.trace));
    let net = MvNetModel::new(branches, head_run.model)?;
    Ok(FixedMvnet {
        net,
        partition: head_run.partition,
        latent: head_run.latent,
        traces,
    })
}

/// Deep multi-view clustering. `truth` only feeds the traces.
pub fn run_dmvc_traced(
    ds: &MultiViewDataset,
    cfg: &JuleConfig,
    variant: DmvcVariant,
    truth: Option<&Partition>,
) -> Result<DmvcOutcome> {
    cfg.validate()?;
    match variant {
        DmvcVariant::Cc => {
            let x = concatenate_views(ds);
            let model = MlpModel::standard(x.dim(), cfg.train.seed)?;
            let out = run_jule_with(&[x.data()], model, cfg, None, truth)?;
            Ok(DmvcOutcome {
                partition: out.partition,
                latent: out.latent,
                model: DmvcModel::Mlp(out.model),
                traces: vec![("cc".to_string(), out.trace)],
            })
        }
        DmvcVariant::MvnetFix => {
            let fixed = train_fixed_mvnet(ds, cfg, truth)?;
            Ok(DmvcOutcome {
                partition: fixed.partition,
                latent: fixed.latent,
                model: DmvcModel::MvNet(fixed.net),
                traces: fixed.traces,
            })
        }
        DmvcVariant::Mvnet => {
            let fixed = train_fixed_mvnet(ds, cfg, truth)?;
            let views: Vec<_> = ds.views().iter().map(|v| v.data()).collect();
            let stage = stage_config(cfg, ds.n_views() as u64 + 1);
            let mut traces = fixed.traces;
            let out = match cfg.end_to_end {
                EndToEnd::Reinit => {
                    let init = init_clusters(fixed.latent.view())?;
                    let init = if init.k() < cfg.k_target { None } else { Some(init) };
                    match init {
                        Some(init) => run_jule_with(&views, fixed.net, &stage, Some(init), truth)?,
                        // too few clusters in the unified space: fine-tune on the head's clusters
                        None => run_jule_with(&views, fixed.net, &stage, Some(fixed.partition), truth)?,
                    }
                }
                EndToEnd::FineTune => run_jule_with(&views, fixed.net, &stage, Some(fixed.partition), truth)?,
            };
            traces.push(("mvnet".to_string(), out.trace));
            Ok(DmvcOutcome {
                partition: out.partition,
                latent: out.latent,
                model: DmvcModel::MvNet(out.model),
                traces,
            })
        }
    }
}

pub fn run_dmvc(ds: &MultiViewDataset, cfg: &JuleConfig, variant: DmvcVariant) -> Result<DmvcOutcome> {
    run_dmvc_traced(ds, cfg, variant, None)
}
