mod common;

use common::*;
use mvclust::cluster::kmeans_array;
use mvclust::dataset::{load_dataset, save_dataset};
use mvclust::jule::k_schedule;
use mvclust::metrics::MetricsReport;
use mvclust::{co_association, nmi, KMeansConfig, MultiViewDataset, Partition, ViewMatrix};
use proptest::prelude::*;

fn relabel(labels: &[usize], perm_seed: u64) -> Vec<usize> {
    let k = labels.iter().max().unwrap() + 1;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut r = rng(perm_seed);
    for i in (1..k).rev() {
        let j = rand::Rng::random_range(&mut r, 0..=i);
        perm.swap(i, j);
    }
    labels.iter().map(|&l| perm[l]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_ignore_label_names(seed in any::<u64>(), n in 2usize..80, kt in 1usize..6, kp in 1usize..6) {
        prop_assume!(n >= kt.max(kp));
        let mut r = rng(seed);
        let t = random_labels(&mut r, n, kt);
        let p = random_labels(&mut r, n, kp);
        let base = MetricsReport::compute(&Partition::new(t.clone()).unwrap(), &Partition::new(p.clone()).unwrap()).unwrap();
        let moved = MetricsReport::compute(
            &Partition::new(relabel(&t, seed ^ 1)).unwrap(),
            &Partition::new(relabel(&p, seed ^ 2)).unwrap(),
        ).unwrap();
        prop_assert!((base.nmi - moved.nmi).abs() < 1e-12);
        prop_assert_eq!(base.pur, moved.pur);
        prop_assert_eq!(base.acc, moved.acc);
        prop_assert!((base.fmi - moved.fmi).abs() < 1e-12);
    }

    #[test]
    fn nmi_of_a_partition_with_itself_is_one(seed in any::<u64>(), n in 1usize..60, k in 1usize..8) {
        prop_assume!(n >= k);
        let t = Partition::new(random_labels(&mut rng(seed), n, k)).unwrap();
        prop_assert!((nmi(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_values_stay_in_unit_interval(seed in any::<u64>(), n in 2usize..60, kt in 1usize..6, kp in 1usize..6) {
        prop_assume!(n >= kt.max(kp));
        let mut r = rng(seed);
        let t = Partition::new(random_labels(&mut r, n, kt)).unwrap();
        let p = Partition::new(random_labels(&mut r, n, kp)).unwrap();
        let m = MetricsReport::compute(&t, &p).unwrap();
        for v in [m.nmi, m.pur, m.acc, m.fmi, m.mix] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.acc <= m.pur + 1e-15);
    }

    #[test]
    fn dataset_round_trips(seed in any::<u64>(), n in 1usize..20, m in 1usize..4) {
        let mut r = rng(seed);
        let views: Vec<ViewMatrix> = (0..m)
            .map(|j| {
                // values representable in f32 survive the 32-bit file format exactly
                let x = random_matrix(&mut r, n, 1 + j, 8.0).mapv(|v| (v as f32) as f64);
                ViewMatrix::new(x, format!("net{j}"), "pool").unwrap()
            })
            .collect();
        let labels = random_labels(&mut r, n, 1 + (seed as usize) % n);
        let ds = MultiViewDataset::new(views, Some(labels), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(&manifest).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn schedule_strictly_decreases_to_target(k0 in 2usize..3000, frac in 0.0f64..1.0, eta in 0.05f64..0.99) {
        let target = 1 + ((k0 - 1) as f64 * frac) as usize;
        let seq = k_schedule(k0, target, eta);
        prop_assert_eq!(seq[0], k0);
        prop_assert_eq!(*seq.last().unwrap(), target);
        prop_assert!(seq.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn co_association_is_symmetric_quantized(seed in any::<u64>(), n in 1usize..25, m in 1usize..7) {
        let mut r = rng(seed);
        let parts: Vec<Partition> = (0..m)
            .map(|_| Partition::new(random_labels(&mut r, n, 1 + (seed as usize) % n)).unwrap())
            .collect();
        let co = co_association(&parts).unwrap();
        let a = co.matrix();
        for i in 0..n {
            prop_assert_eq!(a[[i, i]], 1.0);
            for j in 0..n {
                prop_assert_eq!(a[[i, j]], a[[j, i]]);
                let scaled = a[[i, j]] * m as f64;
                prop_assert!((scaled - scaled.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn kmeans_inertia_never_increases(seed in any::<u64>(), n in 5usize..120, k in 1usize..6, d in 1usize..5) {
        prop_assume!(n >= k);
        let x = random_matrix(&mut rng(seed), n, d, 10.0);
        let cfg = KMeansConfig { k, n_restarts: 1, seed, ..Default::default() };
        let res = kmeans_array(x.view(), &cfg).unwrap();
        prop_assert!(res.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12), "{:?}", res.trace);
        let mut seeds = res.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        prop_assert_eq!(seeds.len(), k);
    }
}

#[test]
fn independent_two_by_two_has_zero_nmi() {
    let t = Partition::new(vec![0, 0, 1, 1]).unwrap();
    let p = Partition::new(vec![0, 1, 0, 1]).unwrap();
    assert!(nmi(&t, &p).unwrap().abs() < 1e-12);
}

#[test]
fn nmi_matches_reference_value() {
    // reference value computed with scikit-learn's arithmetic-mean NMI
    let t = Partition::new(vec![0, 0, 1, 1]).unwrap();
    let p = Partition::new(vec![0, 0, 0, 1]).unwrap();
    assert!((nmi(&t, &p).unwrap() - 0.3437110184854508).abs() < 1e-12);
}
