//! Multi-view clustering toolkit.
//!
//! A dataset is a set of aligned feature matrices ("views") describing the
//! same samples, typically features from several pretrained image networks.
//! The crate provides
//!
//! * the on-disk view format and dataset loader ([`dataset`]),
//! * external validation metrics: NMI, purity, accuracy, Fowlkes-Mallows and
//!   its per-sample form, MIX ([`metrics`]),
//! * k-means and Lance-Williams agglomerative clustering ([`cluster`]),
//! * co-association ensemble consensus over per-view partitions ([`consensus`]),
//! * a small MLP / multi-branch network engine with analytic gradients
//!   ([`neural`]),
//! * the alternating train-then-merge deep clustering loop and its multi-view
//!   variants ([`jule`]),
//! * extractor selection and run evaluation ([`selection`]),
//! * run orchestration, timing model and SVG plots ([`pipeline`]).

pub mod assignment;
pub mod cluster;
pub mod consensus;
pub mod dataset;
pub mod error;
pub mod jule;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod selection;
pub mod synth;

pub use cluster::{agglomerative, kmeans, pairwise_sq_euclidean, AggConfig, KMeansConfig, Linkage};
pub use consensus::{cluster_each_view, co_association, mvec, CoAssociationMatrix};
pub use dataset::{concatenate_views, load_dataset, save_dataset, MultiViewDataset, Partition, ViewMatrix};
pub use error::{Error, Result};
pub use jule::{run_dmvc, run_jule, DmvcVariant, JuleConfig, JuleOutcome};
pub use metrics::{accuracy, fmi, fmi_local, fm_per_class, mix, nmi, purity, MetricsReport};
pub use neural::{MlpModel, MvNetModel, TrainConfig};
pub use selection::{bnet_wnet, evaluate_run, lnet_select, ScoreBoard};
