use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::cluster::sq_dist;
use crate::dataset::Partition;
use crate::error::{Error, Result};

/// Nearest neighbor of every row (Euclidean, ties to the lowest index).
pub fn nearest_neighbors(x: ArrayView2<'_, f64>) -> Vec<usize> {
    let x = x.as_standard_layout();
    let rows: Vec<&[f64]> = x.outer_iter().map(|r| r.to_slice().expect("standard layout")).collect();
    (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (j, r) in rows.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = sq_dist(rows[i], r);
                if d < best {
                    best = d;
                    arg = j;
                }
            }
            arg
        })
        .collect()
}

/// Initial clusters: pair every sample with its nearest neighbor, then
/// merge pairs that share a sample (connected components of the 1-NN graph).
pub fn init_clusters(x: ArrayView2<'_, f64>) -> Result<Partition> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("cluster initialization needs at least two samples"));
    }
    let nn = nearest_neighbors(x);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, &j) in nn.iter().enumerate() {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(Partition::from_labels(&roots)?.canonical())
}
