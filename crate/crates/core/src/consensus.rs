//! Multi-view ensemble clustering (MVEC): cluster every view on its own,
//! accumulate pairwise co-membership evidence, then cluster the resulting
//! co-association matrix with average linkage.

use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::cluster::{agglomerative, agglomerative_from_distances, AggConfig, Linkage};
use crate::dataset::{write_fvb, MultiViewDataset, Partition};
use crate::error::{Error, Result};

/// Default ceiling for one dense `N x N` matrix of doubles: 2 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

/// Refuses `n` when an `n x n` matrix of doubles would exceed `budget` bytes.
pub fn check_dense_budget(n: usize, budget: u64) -> Result<()> {
    let needed = (n as u128) * (n as u128) * 8;
    if needed > budget as u128 {
        return Err(Error::MemoryGuard {
            n,
            needed,
            budget: budget as u128,
        });
    }
    Ok(())
}

/// Fraction of input partitions that put each pair of samples together.
#[derive(Debug, Clone, PartialEq)]
pub struct CoAssociationMatrix {
    m: Array2<f64>,
    n_partitions: usize,
}

impl CoAssociationMatrix {
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.m.view()
    }

    pub fn n_partitions(&self) -> usize {
        self.n_partitions
    }

    /// `1 - m` with an exact zero diagonal.
    pub fn distances(&self) -> Array2<f64> {
        let mut d = self.m.mapv(|v| 1.0 - v);
        d.diag_mut().fill(0.0);
        d
    }

    pub fn export_fvb(&self, path: &Path) -> Result<()> {
        write_fvb(path, self.m.view())
    }
}

pub fn co_association(partitions: &[Partition]) -> Result<CoAssociationMatrix> {
    let Some(first) = partitions.first() else {
        return Err(Error::invalid("co-association needs at least one partition"));
    };
    let n = first.len();
    for p in partitions {
        if p.len() != n {
            return Err(Error::LengthMismatch { left: n, right: p.len() });
        }
    }
    // integer counts keep the result independent of reduction order
    let mut counts = vec![0u32; n * n];
    counts.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for p in partitions {
            let a = p.assignments();
            let ci = a[i];
            for (cell, &cj) in row.iter_mut().zip(a) {
                if cj == ci {
                    *cell += 1;
                }
            }
        }
    });
    let m_count = partitions.len() as f64;
    let m = Array2::from_shape_vec((n, n), counts.into_iter().map(|c| c as f64 / m_count).collect())
        .expect("n*n entries");
    Ok(CoAssociationMatrix {
        m,
        n_partitions: partitions.len(),
    })
}

/// Wall-clock accounting of a per-view fan-out.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewTimings {
    pub per_view_seconds: Vec<f64>,
    pub wall_seconds: f64,
    pub workers: usize,
}

/// Runs `f` on every view index on a pool of `workers` threads, keeping
/// results in view order.
pub(crate) fn fan_out_views<T, F>(m: usize, workers: usize, f: F) -> Result<(Vec<T>, ViewTimings)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let start = Instant::now();
    let results: Vec<(Result<T>, f64)> = pool.install(|| {
        (0..m)
            .into_par_iter()
            .map(|j| {
                let t = Instant::now();
                let r = f(j);
                (r, t.elapsed().as_secs_f64())
            })
            .collect()
    });
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut out = Vec::with_capacity(m);
    let mut per_view_seconds = Vec::with_capacity(m);
    for (r, secs) in results {
        out.push(r?);
        per_view_seconds.push(secs);
    }
    Ok((
        out,
        ViewTimings {
            per_view_seconds,
            wall_seconds,
            workers,
        },
    ))
}

/// Clusters each view independently into `k` clusters with the base
/// agglomerative configuration, in parallel over `workers` threads.
pub fn cluster_each_view(
    ds: &MultiViewDataset,
    k: usize,
    base: &AggConfig,
    workers: usize,
) -> Result<(Vec<Partition>, ViewTimings)> {
    let cfg = AggConfig { k, ..*base };
    fan_out_views(ds.n_views(), workers, |j| agglomerative(ds.view(j), &cfg))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvecOptions {
    pub workers: usize,
    pub memory_budget: u64,
}

impl Default for MvecOptions {
    fn default() -> Self {
        MvecOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MvecOutcome {
    pub partition: Partition,
    pub view_partitions: Vec<Partition>,
    pub co_association: CoAssociationMatrix,
    pub view_timings: ViewTimings,
    /// Time spent building and clustering the co-association matrix.
    pub consensus_seconds: f64,
}

/// Consensus partition into `k` clusters from per-view base clusterings.
pub fn mvec(ds: &MultiViewDataset, k: usize, base: &AggConfig) -> Result<Partition> {
    Ok(mvec_with(ds, k, base, &MvecOptions::default())?.partition)
}

pub fn mvec_with(ds: &MultiViewDataset, k: usize, base: &AggConfig, opts: &MvecOptions) -> Result<MvecOutcome> {
    let n = ds.n_samples();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n}")));
    }
    check_dense_budget(n, opts.memory_budget)?;
    let (view_partitions, view_timings) = cluster_each_view(ds, k, base, opts.workers)?;
    let start = Instant::now();
    let co = co_association(&view_partitions)?;
    let partition = agglomerative_from_distances(co.distances(), k, Linkage::Average)?;
    Ok(MvecOutcome {
        partition,
        view_partitions,
        co_association: co,
        view_timings,
        consensus_seconds: start.elapsed().as_secs_f64(),
    })
}
