//! Greedy cluster merging on a frozen latent representation.
//!
//! The affinity of cluster `a` towards cluster `b` averages, over the points
//! of `a`, the Gaussian kernel `exp(-|z_i - z_j|^2 / sigma^2)` to the `Ks`
//! nearest members of `b`. Merging uses the symmetrized affinity. `sigma^2`
//! is the mean squared distance from each point to its `Ks`-th nearest
//! neighbor, computed once per call.
//!
//! Affinities are compared in the log domain. Between well separated
//! clusters every kernel value can underflow to zero, which would otherwise
//! turn the ranking into a tie.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::pairwise_sq_euclidean;
use crate::dataset::Partition;
use crate::error::{Error, Result};

/// One merge, in the labels current at that step: `b` joins `a` (`a < b`)
/// and labels above `b` shift down by one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub a: usize,
    pub b: usize,
    pub affinity: f64,
    pub log_affinity: f64,
}

/// Kernel bandwidth: mean squared distance to the `ks`-th nearest neighbor.
pub fn kernel_bandwidth(sq_dists: ArrayView2<'_, f64>, ks: usize) -> f64 {
    let n = sq_dists.nrows();
    if n < 2 {
        return 1.0;
    }
    let rank = ks.clamp(1, n - 1);
    let total: f64 = sq_dists
        .outer_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut others: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .collect();
            let (_, kth, _) = others.select_nth_unstable_by(rank - 1, f64::total_cmp);
            *kth
        })
        .sum();
    let sigma2 = total / n as f64;
    if sigma2 > 0.0 {
        sigma2
    } else {
        f64::EPSILON
    }
}

/// Log of the directed affinity of `from` towards `to`.
pub(crate) fn directed_log_affinity(sq: &Array2<f64>, from: &[usize], to: &[usize], ks: usize, sigma2: f64) -> f64 {
    let m = ks.min(to.len()).max(1);
    let mut buf = Vec::with_capacity(to.len());
    let mut exponents = Vec::with_capacity(from.len() * m);
    for &i in from {
        buf.clear();
        buf.extend(to.iter().map(|&j| sq[[i, j]]));
        if m < buf.len() {
            buf.select_nth_unstable_by(m - 1, f64::total_cmp);
        }
        let mut nearest = buf[..m].to_vec();
        nearest.sort_by(f64::total_cmp);
        exponents.extend(nearest.iter().map(|d| -d / sigma2));
    }
    log_sum_exp(&exponents) - ((from.len() * m) as f64).ln()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

fn symmetric_log_affinity(sq: &Array2<f64>, a: &[usize], b: &[usize], ks: usize, sigma2: f64) -> f64 {
    let ab = directed_log_affinity(sq, a, b, ks, sigma2);
    let ba = directed_log_affinity(sq, b, a, ks, sigma2);
    log_sum_exp(&[ab, ba]) - std::f64::consts::LN_2
}

/// Merges clusters of `partition`, highest affinity first, until `target_k`
/// remain. Returns the new partition and the merge sequence.
pub fn merge_clusters(
    latent: ArrayView2<'_, f64>,
    partition: &Partition,
    target_k: usize,
    ks: usize,
) -> Result<(Partition, Vec<MergeStep>)> {
    let sq = pairwise_sq_euclidean(latent);
    merge_with_distances(&sq, partition, target_k, ks)
}

pub(crate) fn merge_with_distances(
    sq: &Array2<f64>,
    partition: &Partition,
    target_k: usize,
    ks: usize,
) -> Result<(Partition, Vec<MergeStep>)> {
    let k = partition.k();
    if target_k == 0 || target_k > k {
        return Err(Error::invalid(format!("merge target {target_k} must lie in 1..={k}")));
    }
    if sq.nrows() != partition.len() {
        return Err(Error::LengthMismatch {
            left: sq.nrows(),
            right: partition.len(),
        });
    }
    let sigma2 = kernel_bandwidth(sq.view(), ks);
    let mut members = partition.members();
    let mut active = vec![true; k];

    let mut aff = vec![vec![f64::NEG_INFINITY; k]; k];
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| ((a + 1)..k).map(move |b| (a, b))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| symmetric_log_affinity(sq, &members[a], &members[b], ks, sigma2))
        .collect();
    for (&(a, b), v) in pairs.iter().zip(values) {
        aff[a][b] = v;
        aff[b][a] = v;
    }

    let mut steps = Vec::with_capacity(k - target_k);
    let mut remaining = k;
    while remaining > target_k {
        let mut best = (usize::MAX, usize::MAX);
        let mut best_v = f64::NEG_INFINITY;
        for a in (0..k).filter(|&a| active[a]) {
            for b in ((a + 1)..k).filter(|&b| active[b]) {
                if best.0 == usize::MAX || aff[a][b] > best_v {
                    best_v = aff[a][b];
                    best = (a, b);
                }
            }
        }
        let (a, b) = best;
        let label = |s: usize| active[..s].iter().filter(|&&x| x).count();
        steps.push(MergeStep {
            a: label(a),
            b: label(b),
            affinity: best_v.exp(),
            log_affinity: best_v,
        });

        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        members[a].sort_unstable();
        active[b] = false;
        remaining -= 1;

        let others: Vec<usize> = (0..k).filter(|&x| active[x] && x != a).collect();
        let updated: Vec<f64> = others
            .par_iter()
            .map(|&x| symmetric_log_affinity(sq, &members[a], &members[x], ks, sigma2))
            .collect();
        for (&x, v) in others.iter().zip(updated) {
            aff[a][x] = v;
            aff[x][a] = v;
        }
    }

    let mut slot_label = vec![usize::MAX; k];
    let mut next = 0;
    for s in 0..k {
        if active[s] {
            slot_label[s] = next;
            next += 1;
        }
    }
    let mut labels = vec![0usize; partition.len()];
    for (s, m) in members.iter().enumerate() {
        for &i in m {
            labels[i] = slot_label[s];
        }
    }
    Ok((Partition::new(labels)?, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn coincident_singletons_merge_first() {
        let z = array![[0.0, 0.0], [10.0, 0.0], [10.0, 0.0], [0.0, 10.0], [20.0, 20.0]];
        let p = Partition::new(vec![0, 1, 2, 3, 4]).unwrap();
        let (q, steps) = merge_clusters(z.view(), &p, 4, 2).unwrap();
        assert_eq!((steps[0].a, steps[0].b), (1, 2));
        assert_eq!(q.assignments(), &[0, 1, 1, 2, 3]);
    }

    #[test]
    fn one_step_merges_exactly_once() {
        let z = array![[0.0], [1.0], [3.0], [7.0], [15.0]];
        let p = Partition::new(vec![0, 1, 2, 3, 4]).unwrap();
        let (q, steps) = merge_clusters(z.view(), &p, 4, 5).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(q.k(), 4);
    }

    #[test]
    fn far_clusters_rank_despite_underflow() {
        // Cross-cluster kernels are all far below the smallest f64.
        let z = array![[0.0], [0.01], [50.0], [50.01], [140.0], [140.01]];
        let p = Partition::new(vec![0, 1, 2, 3, 4, 5]).unwrap();
        let (q, steps) = merge_clusters(z.view(), &p, 2, 1).unwrap();
        assert_eq!(q.assignments(), &[0, 0, 0, 0, 1, 1]);
        assert_eq!(steps[3].affinity, 0.0);
        assert!(steps[3].log_affinity.is_finite());
    }

    #[test]
    fn target_out_of_range_is_rejected() {
        let z = array![[0.0], [1.0]];
        let p = Partition::new(vec![0, 1]).unwrap();
        assert!(merge_clusters(z.view(), &p, 3, 5).is_err());
        assert!(merge_clusters(z.view(), &p, 0, 5).is_err());
    }
}
