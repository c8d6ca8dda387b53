//! Independent reference implementations used by the integration tests.
//! Each one recomputes its quantity straight from the definition, without
//! sharing code with the library.
#![allow(dead_code)]

use mvclust::cluster::Linkage;
use mvclust::neural::{loss_and_gradients, Dense, Network};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Labels in `0..k` with every label used at least once (requires `n >= k`).
pub fn random_labels(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

pub fn random_matrix(rng: &mut impl Rng, n: usize, d: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..scale))
}

/// Renumbers labels by first appearance.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Accuracy as the maximum, over all one-to-one maps from clusters to
/// classes, of the matched fraction.
pub fn brute_force_accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    let kt = y_true.iter().max().map_or(0, |m| m + 1);
    let kp = y_pred.iter().max().map_or(0, |m| m + 1);
    let k = kt.max(kp);
    let best = permutations(k)
        .into_iter()
        .map(|perm| y_true.iter().zip(y_pred).filter(|(&t, &p)| perm[p] == t).count())
        .max()
        .unwrap_or(0);
    best as f64 / y_true.len() as f64
}

/// Per-sample `(TP_i, pred_i, true_i)` by enumerating every other sample.
pub fn enumerate_local_pairs(y_true: &[usize], y_pred: &[usize]) -> Vec<(u64, u64, u64)> {
    let n = y_true.len();
    (0..n)
        .map(|i| {
            let mut c = (0, 0, 0);
            for j in (0..n).filter(|&j| j != i) {
                let sp = y_pred[i] == y_pred[j];
                let st = y_true[i] == y_true[j];
                c.0 += (sp && st) as u64;
                c.1 += sp as u64;
                c.2 += st as u64;
            }
            c
        })
        .collect()
}

fn fm(tp: u64, pred: u64, truth: u64) -> f64 {
    if tp == 0 {
        0.0
    } else {
        tp as f64 / (pred as f64 * truth as f64).sqrt()
    }
}

/// Fowlkes-Mallows index by enumerating unordered pairs.
pub fn enumerate_fmi(y_true: &[usize], y_pred: &[usize]) -> (f64, u64) {
    let n = y_true.len();
    let (mut tp, mut pred, mut truth) = (0u64, 0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let sp = y_pred[i] == y_pred[j];
            let st = y_true[i] == y_true[j];
            tp += (sp && st) as u64;
            pred += sp as u64;
            truth += st as u64;
        }
    }
    (fm(tp, pred, truth), tp)
}

pub fn enumerate_fmi_local(y_true: &[usize], y_pred: &[usize]) -> Vec<f64> {
    enumerate_local_pairs(y_true, y_pred)
        .into_iter()
        .map(|(tp, p, t)| fm(tp, p, t))
        .collect()
}

fn euclid(a: ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    a.row(i)
        .iter()
        .zip(a.row(j))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn cluster_distance(x: ArrayView2<'_, f64>, a: &[usize], b: &[usize], linkage: Linkage) -> f64 {
    let pair = || a.iter().flat_map(|&i| b.iter().map(move |&j| euclid(x, i, j)));
    match linkage {
        Linkage::Single => pair().fold(f64::INFINITY, f64::min),
        Linkage::Complete => pair().fold(0.0, f64::max),
        Linkage::Average => pair().sum::<f64>() / (a.len() * b.len()) as f64,
        Linkage::Ward => {
            let centroid = |m: &[usize]| -> Vec<f64> {
                let mut c = vec![0.0; x.ncols()];
                for &i in m {
                    for (cv, xv) in c.iter_mut().zip(x.row(i)) {
                        *cv += xv;
                    }
                }
                c.iter().map(|v| v / m.len() as f64).collect()
            };
            let (ca, cb) = (centroid(a), centroid(b));
            let d2: f64 = ca.iter().zip(&cb).map(|(p, q)| (p - q) * (p - q)).sum();
            let (na, nb) = (a.len() as f64, b.len() as f64);
            (2.0 * na * nb / (na + nb) * d2).sqrt()
        }
    }
}

/// Agglomerative clustering that recomputes every inter-cluster distance
/// from its definition at every step. Clusters are identified by their
/// smallest member; ties go to the lexicographically smallest pair.
pub fn naive_agglomerative(x: ArrayView2<'_, f64>, k: usize, linkage: Linkage) -> Vec<usize> {
    let n = x.nrows();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > k {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let d = cluster_distance(x, &clusters[a], &clusters[b], linkage);
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        let moved = clusters.remove(best.1);
        clusters[best.0].extend(moved);
        clusters[best.0].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
    }
    let mut labels = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    canonical(&labels)
}

/// Co-association by looping over partitions and sample pairs.
pub fn naive_co_association(partitions: &[Vec<usize>]) -> Array2<f64> {
    let n = partitions[0].len();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let agree = partitions.iter().filter(|p| p[i] == p[j]).count();
            m[[i, j]] = agree as f64 / partitions.len() as f64;
        }
    }
    m
}

/// Symmetrized Ks-NN Gaussian-kernel affinity, computed with full sorts.
pub fn brute_affinity(z: ArrayView2<'_, f64>, a: &[usize], b: &[usize], ks: usize, sigma2: f64) -> f64 {
    let directed = |from: &[usize], to: &[usize]| -> f64 {
        let m = ks.min(to.len()).max(1);
        from.iter()
            .map(|&i| {
                let mut d: Vec<f64> = to.iter().map(|&j| euclid(z, i, j).powi(2)).collect();
                d.sort_by(f64::total_cmp);
                d[..m].iter().map(|v| (-v / sigma2).exp()).sum::<f64>() / m as f64
            })
            .sum::<f64>()
            / from.len() as f64
    };
    0.5 * (directed(a, b) + directed(b, a))
}

/// Mean over points of the squared distance to the `ks`-th nearest other point.
pub fn brute_bandwidth(z: ArrayView2<'_, f64>, ks: usize) -> f64 {
    let n = z.nrows();
    let rank = ks.clamp(1, n - 1);
    let total: f64 = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| euclid(z, i, j).powi(2)).collect();
            d.sort_by(f64::total_cmp);
            d[rank - 1]
        })
        .sum();
    total / n as f64
}

/// Greedy merging that recomputes every affinity at every step.
pub fn brute_merge(z: ArrayView2<'_, f64>, labels: &[usize], target_k: usize, ks: usize) -> (Vec<usize>, Vec<(usize, usize)>) {
    let sigma2 = brute_bandwidth(z, ks);
    let k = labels.iter().max().unwrap() + 1;
    let mut clusters: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    let mut steps = Vec::new();
    while clusters.len() > target_k {
        let mut best = (0, 1, f64::NEG_INFINITY);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let v = brute_affinity(z, &clusters[a], &clusters[b], ks, sigma2);
                if v > best.2 {
                    best = (a, b, v);
                }
            }
        }
        steps.push((best.0, best.1));
        let moved = clusters.remove(best.1);
        clusters[best.0].extend(moved);
    }
    let mut out = vec![0; labels.len()];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            out[i] = c;
        }
    }
    (out, steps)
}

/// Largest relative error between analytic and central-difference
/// gradients of the training loss, over every model and classifier
/// parameter.
pub fn gradient_check<N: Network>(model: &N, classifier: &Dense, inputs: &[ArrayView2<'_, f64>], labels: &[usize], h: f64) -> (f64, usize) {
    let grads = loss_and_gradients(model, classifier, inputs, labels).unwrap();
    let loss_at = |m: &N, c: &Dense| loss_and_gradients(m, c, inputs, labels).unwrap().loss;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
    let mut worst = 0.0f64;
    let mut count = 0;

    let n_layers = model.params().len();
    for l in 0..n_layers {
        let (rows, cols) = model.params()[l].w.dim();
        for r in 0..rows {
            for c in 0..cols {
                let mut plus = model.clone();
                plus.params_mut()[l].w[[r, c]] += h;
                let mut minus = model.clone();
                minus.params_mut()[l].w[[r, c]] -= h;
                let numeric = (loss_at(&plus, classifier) - loss_at(&minus, classifier)) / (2.0 * h);
                worst = worst.max(rel(grads.model[l].w[[r, c]], numeric));
                count += 1;
            }
        }
        for c in 0..model.params()[l].b.len() {
            let mut plus = model.clone();
            plus.params_mut()[l].b[c] += h;
            let mut minus = model.clone();
            minus.params_mut()[l].b[c] -= h;
            let numeric = (loss_at(&plus, classifier) - loss_at(&minus, classifier)) / (2.0 * h);
            worst = worst.max(rel(grads.model[l].b[c], numeric));
            count += 1;
        }
    }
    let (rows, cols) = classifier.w.dim();
    for r in 0..rows {
        for c in 0..cols {
            let mut plus = classifier.clone();
            plus.w[[r, c]] += h;
            let mut minus = classifier.clone();
            minus.w[[r, c]] -= h;
            let numeric = (loss_at(model, &plus) - loss_at(model, &minus)) / (2.0 * h);
            worst = worst.max(rel(grads.classifier.w[[r, c]], numeric));
            count += 1;
        }
    }
    for c in 0..classifier.b.len() {
        let mut plus = classifier.clone();
        plus.b[c] += h;
        let mut minus = classifier.clone();
        minus.b[c] -= h;
        let numeric = (loss_at(model, &plus) - loss_at(model, &minus)) / (2.0 * h);
        worst = worst.max(rel(grads.classifier.b[c], numeric));
        count += 1;
    }
    (worst, count)
}

/// Fills every weight and bias with uniform values in `[-scale, scale)`.
pub fn randomize<N: Network>(model: &mut N, rng: &mut impl Rng, scale: f64) {
    for p in model.params_mut() {
        p.w.mapv_inplace(|_| rng.random_range(-scale..scale));
        p.b.mapv_inplace(|_| rng.random_range(-scale..scale));
    }
}

pub fn random_dense(rng: &mut impl Rng, fan_in: usize, fan_out: usize, scale: f64) -> Dense {
    let mut d = Dense::zeros(fan_in, fan_out);
    d.w.mapv_inplace(|_| rng.random_range(-scale..scale));
    d.b.mapv_inplace(|_| rng.random_range(-scale..scale));
    d
}
