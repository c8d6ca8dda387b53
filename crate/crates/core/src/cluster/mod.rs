//! Base clustering algorithms: k-means and agglomerative hierarchical clustering.

mod agglomerative;
mod kmeans;

pub use agglomerative::{agglomerative, agglomerative_from_distances, linkage_tree, Merge};
pub use kmeans::{kmeans, kmeans_array, KMeansResult};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Defaults mirror the scikit-learn k-means configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 8,
            n_restarts: 10,
            max_iter: 300,
            tol: 1e-4,
            seed: 0,
        }
    }
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Average,
    Complete,
    Single,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Ward, Linkage::Average, Linkage::Complete, Linkage::Single];
}

impl std::str::FromStr for Linkage {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ward" => Ok(Linkage::Ward),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(crate::Error::Config(format!(
                "unknown linkage {other:?}; expected ward, average, complete or single"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggConfig {
    pub k: usize,
    pub linkage: Linkage,
}

impl Default for AggConfig {
    fn default() -> Self {
        AggConfig {
            k: 2,
            linkage: Linkage::Ward,
        }
    }
}

impl AggConfig {
    pub fn new(k: usize, linkage: Linkage) -> Self {
        AggConfig { k, linkage }
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// All pairwise squared Euclidean distances, computed row by row from
/// explicit differences.
pub fn pairwise_sq_euclidean(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let x = x.as_standard_layout();
    let rows: Vec<&[f64]> = x.outer_iter().map(|r| r.to_slice().expect("standard layout")).collect();
    let mut out = Array2::zeros((n, n));
    out.as_slice_mut()
        .expect("fresh array is contiguous")
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                if i != j {
                    *cell = sq_dist(rows[i], rows[j]);
                }
            }
        });
    out
}
