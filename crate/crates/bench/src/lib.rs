//! Shared inputs for the criterion benches.

use mvclust::synth::random_blobs;
use mvclust::{Partition, ViewMatrix};

/// `n` points in `d` dimensions drawn around `k` centers.
pub fn blob_view(n: usize, d: usize, k: usize, seed: u64) -> ViewMatrix {
    let per = n.div_ceil(k);
    let (x, _) = random_blobs(k, per, d, 20.0, seed).expect("valid blob parameters");
    let x = x.slice_move(ndarray::s![..n, ..]);
    ViewMatrix::from_array(x).expect("finite blobs")
}

/// A pair of partitions of `n` samples with `k` labels each, the second a
/// shifted copy of the first with every seventh sample relabeled.
pub fn partition_pair(n: usize, k: usize) -> (Partition, Partition) {
    let a: Vec<usize> = (0..n).map(|i| i % k).collect();
    let b: Vec<usize> = (0..n).map(|i| if i % 7 == 0 { (i + 1) % k } else { i % k }).collect();
    (
        Partition::from_labels(&a).expect("non-empty"),
        Partition::from_labels(&b).expect("non-empty"),
    )
}
