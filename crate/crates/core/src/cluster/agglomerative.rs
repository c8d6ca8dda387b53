//! Agglomerative clustering with Lance-Williams distance updates.
//!
//! Clusters live in "slots": slot `i` starts as sample `i`, and merging the
//! slots `a < b` keeps `a`, so a slot's index is always the smallest sample
//! index it contains. At each step the pair at minimum distance is merged,
//! ties going to the lexicographically smallest `(a, b)`.
//!
//! Each active slot caches its nearest active slot with a larger index.
//! After a merge only the rows whose cached neighbor was one of the merged
//! slots are rescanned, which keeps typical runs near `O(N^2)`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{pairwise_sq_euclidean, AggConfig, Linkage};
use crate::dataset::{Partition, ViewMatrix};
use crate::error::{Error, Result};

/// One merge step: slots `a < b` joined at `distance`; the result keeps slot `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

struct Dissimilarity {
    n: usize,
    d: Vec<f64>,
}

impl Dissimilarity {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.d[i * self.n + j] = v;
        self.d[j * self.n + i] = v;
    }
}

fn lance_williams(linkage: Linkage, d_ak: f64, d_bk: f64, d_ab: f64, n_a: usize, n_b: usize, n_k: usize) -> f64 {
    match linkage {
        Linkage::Single => d_ak.min(d_bk),
        Linkage::Complete => d_ak.max(d_bk),
        Linkage::Average => (n_a as f64 * d_ak + n_b as f64 * d_bk) / (n_a + n_b) as f64,
        Linkage::Ward => {
            let (na, nb, nk) = (n_a as f64, n_b as f64, n_k as f64);
            let v = ((na + nk) * d_ak * d_ak + (nb + nk) * d_bk * d_bk - nk * d_ab * d_ab) / (na + nb + nk);
            v.max(0.0).sqrt()
        }
    }
}

fn validate(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the number of samples N = {n}")));
    }
    Ok(())
}

/// Runs the merge loop on a symmetric dissimilarity matrix until `stop_at`
/// clusters remain, returning the merges in order.
pub fn linkage_tree(distances: Array2<f64>, linkage: Linkage, stop_at: usize) -> Result<Vec<Merge>> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: distances.ncols(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let stop_at = stop_at.max(1);
    let mut dis = Dissimilarity {
        n,
        d: distances.into_raw_vec_and_offset().0,
    };
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];

    let rescan = |x: usize, dis: &Dissimilarity, active: &[bool], nn: &mut [usize], nn_d: &mut [f64]| {
        let mut best = f64::INFINITY;
        let mut arg = usize::MAX;
        let row = &dis.d[x * n..(x + 1) * n];
        for (y, &d) in row.iter().enumerate().skip(x + 1) {
            if active[y] && d < best {
                best = d;
                arg = y;
            }
        }
        nn[x] = arg;
        nn_d[x] = best;
    };

    for x in 0..n {
        rescan(x, &dis, &active, &mut nn, &mut nn_d);
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(stop_at));
    let mut clusters = n;
    while clusters > stop_at {
        let mut a = usize::MAX;
        let mut best = f64::INFINITY;
        for x in 0..n {
            if active[x] && nn[x] != usize::MAX && (a == usize::MAX || nn_d[x] < best) {
                best = nn_d[x];
                a = x;
            }
        }
        if a == usize::MAX {
            return Err(Error::Numeric("no finite merge candidate left".into()));
        }
        let b = nn[a];
        let d_ab = dis.get(a, b);
        let (n_a, n_b) = (size[a], size[b]);

        active[b] = false;
        for x in 0..n {
            if active[x] && x != a {
                let v = lance_williams(linkage, dis.get(a, x), dis.get(b, x), d_ab, n_a, n_b, size[x]);
                dis.set(a, x, v);
            }
        }
        size[a] = n_a + n_b;
        nn[b] = usize::MAX;
        nn_d[b] = f64::INFINITY;
        merges.push(Merge {
            a,
            b,
            distance: d_ab,
            size: size[a],
        });
        clusters -= 1;

        for x in 0..b {
            if !active[x] {
                continue;
            }
            if x == a || nn[x] == a || nn[x] == b {
                rescan(x, &dis, &active, &mut nn, &mut nn_d);
            } else if x < a {
                let d = dis.get(x, a);
                if d < nn_d[x] || (d == nn_d[x] && a < nn[x]) {
                    nn_d[x] = d;
                    nn[x] = a;
                }
            }
        }
    }
    Ok(merges)
}

/// Labels obtained by replaying `merges` on `n` singletons.
pub fn cut(n: usize, merges: &[Merge]) -> Partition {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for m in merges {
        let (ra, rb) = (find(&mut parent, m.a), find(&mut parent, m.b));
        parent[rb] = ra;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Partition::from_labels(&roots).expect("n ≥ 1").canonical()
}

/// Agglomerative clustering on a precomputed dissimilarity matrix.
pub fn agglomerative_from_distances(distances: Array2<f64>, k: usize, linkage: Linkage) -> Result<Partition> {
    let n = distances.nrows();
    validate(n, k)?;
    let merges = linkage_tree(distances, linkage, k)?;
    Ok(cut(n, &merges))
}

/// Euclidean agglomerative clustering of the rows of `x`, cut at `cfg.k` clusters.
pub fn agglomerative(x: &ViewMatrix, cfg: &AggConfig) -> Result<Partition> {
    validate(x.n_samples(), cfg.k)?;
    agglomerative_from_distances(euclidean_distances(x.data()), cfg.k, cfg.linkage)
}

pub(crate) fn euclidean_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut d = pairwise_sq_euclidean(x);
    d.mapv_inplace(f64::sqrt);
    d
}
