//! k-means++ seeding followed by Lloyd iterations, best of several restarts.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{sq_dist, KMeansConfig};
use crate::dataset::{Partition, ViewMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: Partition,
    pub inertia: f64,
    pub centroids: Array2<f64>,
    /// Indices of the data points chosen by k-means++ for the winning restart.
    pub seeds: Vec<usize>,
    /// Inertia after every assignment step of the winning restart.
    pub trace: Vec<f64>,
}

/// Clusters the rows of `x`; returns the lowest-inertia partition over
/// `cfg.n_restarts` seeded runs.
pub fn kmeans(x: &ViewMatrix, cfg: &KMeansConfig) -> Result<(Partition, f64)> {
    let r = kmeans_array(x.data(), cfg)?;
    Ok((r.partition, r.inertia))
}

/// Same as [`kmeans`] but on a raw matrix, returning the full result.
pub fn kmeans_array(x: ArrayView2<'_, f64>, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = x.nrows();
    if cfg.k == 0 || cfg.n_restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::invalid("k, n_restarts and max_iter must be positive"));
    }
    if cfg.k > n {
        return Err(Error::invalid(format!("k = {} exceeds the number of samples N = {n}", cfg.k)));
    }
    if !(cfg.tol >= 0.0) {
        return Err(Error::invalid("tol must be non-negative"));
    }
    let x = x.as_standard_layout();
    let rows: Vec<&[f64]> = x.outer_iter().map(|r| r.to_slice().expect("standard layout")).collect();

    // scikit-learn scales the tolerance by the mean per-feature variance
    let variance = x.var_axis(Axis(0), 0.0).mean().unwrap_or(0.0);
    let tol = cfg.tol * variance;

    let runs: Vec<KMeansResult> = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(restart as u64);
            lloyd(&rows, cfg.k, cfg.max_iter, tol, &mut rng)
        })
        .collect();

    let mut best: Option<KMeansResult> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance to the nearest chosen center.
pub(crate) fn kmeans_plus_plus(rows: &[&[f64]], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = rows.len();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut closest: Vec<f64> = rows.iter().map(|r| sq_dist(r, rows[first])).collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in closest.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
            pick.expect("positive mass")
        } else {
            // remaining points all coincide with chosen centers
            taken.iter().position(|t| !t).expect("k ≤ n")
        };
        chosen.push(next);
        taken[next] = true;
        for (c, r) in closest.iter_mut().zip(rows) {
            *c = c.min(sq_dist(r, rows[next]));
        }
        closest[next] = 0.0;
    }
    chosen
}

fn assign(rows: &[&[f64]], centroids: &Array2<f64>, labels: &mut [usize], dists: &mut [f64]) -> f64 {
    let cents: Vec<&[f64]> = centroids.outer_iter().map(|c| c.to_slice().expect("contiguous")).collect();
    labels
        .par_iter_mut()
        .zip(dists.par_iter_mut())
        .zip(rows.par_iter())
        .for_each(|((label, dist), row)| {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (c, cent) in cents.iter().enumerate() {
                let d = sq_dist(row, cent);
                if d < best {
                    best = d;
                    arg = c;
                }
            }
            *label = arg;
            *dist = best;
        });
    dists.iter().sum()
}

/// Gives every empty cluster the point currently farthest from its centroid
/// (taken from a cluster with more than one member). Returns the new inertia.
fn repair_empty(rows: &[&[f64]], centroids: &mut Array2<f64>, labels: &mut [usize], dists: &mut [f64]) -> f64 {
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..rows.len())
            .filter(|&i| counts[labels[i]] > 1)
            .fold(None::<usize>, |acc, i| match acc {
                Some(j) if dists[j] >= dists[i] => Some(j),
                _ => Some(i),
            })
            .expect("k ≤ n leaves a cluster with spare members");
        counts[labels[far]] -= 1;
        counts[c] = 1;
        labels[far] = c;
        dists[far] = 0.0;
        centroids.row_mut(c).assign(&ndarray::ArrayView1::from(rows[far]));
    }
    dists.iter().sum()
}

fn update_centroids(rows: &[&[f64]], labels: &[usize], k: usize, d: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((k, d));
    let mut counts = vec![0usize; k];
    for (row, &l) in rows.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(row.iter()) {
            *s += v;
        }
    }
    for (mut s, &c) in sums.outer_iter_mut().zip(&counts) {
        if c > 0 {
            s /= c as f64;
        }
    }
    sums
}

fn lloyd(rows: &[&[f64]], k: usize, max_iter: usize, tol: f64, rng: &mut ChaCha8Rng) -> KMeansResult {
    let n = rows.len();
    let d = rows[0].len();
    let seeds = kmeans_plus_plus(rows, k, rng);
    let mut centroids = Array2::zeros((k, d));
    for (c, &s) in seeds.iter().enumerate() {
        centroids.row_mut(c).assign(&ndarray::ArrayView1::from(rows[s]));
    }
    let mut labels = vec![0usize; n];
    let mut dists = vec![0f64; n];
    let mut trace = Vec::new();

    for _ in 0..max_iter {
        assign(rows, &centroids, &mut labels, &mut dists);
        trace.push(repair_empty(rows, &mut centroids, &mut labels, &mut dists));
        let next = update_centroids(rows, &labels, k, d);
        let shift: f64 = (&next - &centroids).mapv(|v| v * v).sum();
        centroids = next;
        if shift <= tol {
            break;
        }
    }
    assign(rows, &centroids, &mut labels, &mut dists);
    let inertia = repair_empty(rows, &mut centroids, &mut labels, &mut dists);
    trace.push(inertia);

    let partition = Partition::new(labels).expect("every cluster non-empty after repair");
    KMeansResult {
        partition,
        inertia,
        centroids,
        seeds,
        trace,
    }
}
