//! Acceptance gate: one line per criterion, then a single assertion that all
//! of them passed. Run with `cargo test -p mvclust-core --test acceptance -- --nocapture`.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use common::*;
use mvclust::cluster::kmeans_array;
use mvclust::consensus::{mvec_with, MvecOptions};
use mvclust::jule::init::init_clusters;
use mvclust::metrics::{local_pair_counts, ContingencyTable};
use mvclust::neural::{MlpModel, MvNetModel};
use mvclust::pipeline::{estimate_parallel_time, run, run_on, Method, RunConfig, TimingBreakdown};
use mvclust::selection::{lnet_leave_one_out, lnet_select};
use mvclust::synth::{random_blobs, ComplementaryBlobs};
use mvclust::{
    accuracy, agglomerative, co_association, fmi, fmi_local, nmi, run_jule, save_dataset, AggConfig, JuleConfig,
    KMeansConfig, Linkage, MultiViewDataset, Partition, ScoreBoard, ViewMatrix,
};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    for i in 0..200 {
        let k = r.random_range(1..=6);
        let kp = r.random_range(1..=6);
        let n = r.random_range(k.max(kp).max(2)..=50);
        let t = random_labels(&mut r, n, k);
        let p = random_labels(&mut r, n, kp);
        let got = accuracy(&Partition::new(t.clone()).unwrap(), &Partition::new(p.clone()).unwrap()).unwrap();
        let want = brute_force_accuracy(&t, &p);
        if got != want {
            return Err(format!("accuracy instance {i}: {got} vs {want}"));
        }
    }
    for i in 0..100 {
        let k = r.random_range(1..=10);
        let kp = r.random_range(1..=10);
        let n = r.random_range(k.max(kp).max(2)..=200);
        let t = random_labels(&mut r, n, k);
        let p = random_labels(&mut r, n, kp);
        let (yt, yp) = (Partition::new(t.clone()).unwrap(), Partition::new(p.clone()).unwrap());
        let (want, _) = enumerate_fmi(&t, &p);
        let got = fmi(&yt, &yp).unwrap();
        if (got - want).abs() >= 1e-10 {
            return Err(format!("fmi instance {i}: {got} vs {want}"));
        }
        let local = fmi_local(&yt, &yp).unwrap();
        let oracle = enumerate_fmi_local(&t, &p);
        if local.iter().zip(&oracle).any(|(a, b)| (a - b).abs() >= 1e-10) {
            return Err(format!("local fmi instance {i} differs"));
        }
        let tp_sum: u64 = local_pair_counts(&yt, &yp).unwrap().iter().map(|c| c.0).sum();
        let tp = ContingencyTable::new(&yt, &yp).unwrap().pair_counts().0;
        if 2 * tp != tp_sum {
            return Err(format!("instance {i}: 2*TP = {} but sum TP_i = {tp_sum}", 2 * tp));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, format!("200 accuracy + 100 FMI instances exact, {secs:.2}s"))
}

fn nmi_properties() -> Outcome {
    let mut r = rng(2);
    for _ in 0..100 {
        let n = r.random_range(1..60);
        let k = r.random_range(1..=n.min(8));
        let y = Partition::new(random_labels(&mut r, n, k)).unwrap();
        let v = nmi(&y, &y).unwrap();
        if (v - 1.0).abs() > 1e-12 {
            return Err(format!("NMI(Y, Y) = {v}"));
        }
    }
    let indep = nmi(
        &Partition::new(vec![0, 0, 1, 1]).unwrap(),
        &Partition::new(vec![0, 1, 0, 1]).unwrap(),
    )
    .unwrap();
    if indep.abs() >= 1e-12 {
        return Err(format!("independent 2x2 gives {indep}"));
    }
    for i in 0..100 {
        let n = r.random_range(2..80);
        let (kt, kp) = (r.random_range(1..=n.min(6)), r.random_range(1..=n.min(6)));
        let t = random_labels(&mut r, n, kt);
        let p = random_labels(&mut r, n, kp);
        let base = nmi(&Partition::new(t.clone()).unwrap(), &Partition::new(p.clone()).unwrap()).unwrap();
        let shift = |l: &[usize], s: usize| -> Vec<usize> {
            let k = l.iter().max().unwrap() + 1;
            l.iter().map(|v| (v + s) % k).collect()
        };
        let moved = nmi(
            &Partition::new(shift(&t, 1 + i % 3)).unwrap(),
            &Partition::new(shift(&p, 2 + i % 5)).unwrap(),
        )
        .unwrap();
        if (base - moved).abs() > 1e-12 {
            return Err(format!("relabeling changed NMI: {base} vs {moved}"));
        }
    }
    Ok("NMI(Y,Y)=1, independent 2x2 = 0, 100 relabelings invariant".into())
}

fn agglomerative_oracle() -> Outcome {
    let mut r = rng(3);
    for i in 0..100 {
        let n = r.random_range(2..=12);
        let d = r.random_range(1..=4);
        let k = r.random_range(1..=n);
        let x = random_matrix(&mut r, n, d, 10.0);
        let view = ViewMatrix::from_array(x.clone()).unwrap();
        for linkage in Linkage::ALL {
            let got = agglomerative(&view, &AggConfig::new(k, linkage)).unwrap();
            if got.assignments() != naive_agglomerative(x.view(), k, linkage) {
                return Err(format!("instance {i}, {linkage:?} differs from the recompute oracle"));
            }
        }
    }
    Ok("100 instances x 4 linkages identical to the recompute oracle".into())
}

fn agglomerative_scale() -> Outcome {
    let (x, y) = random_blobs(100, 72, 2048, 10.0, 4).unwrap();
    let view = ViewMatrix::from_array(x).unwrap();
    let start = Instant::now();
    let p = agglomerative(&view, &AggConfig::new(100, Linkage::Ward)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let score = nmi(&Partition::new(y).unwrap(), &p).unwrap();
    check(
        secs < 600.0 && p.k() == 100,
        format!("N = 7200, d = 2048 Ward in {secs:.1}s (NMI {score:.3})"),
    )
}

fn kmeans_properties() -> Outcome {
    let mut r = rng(5);
    let mut runs = 0;
    for s in 0..60u64 {
        let n = r.random_range(10..200);
        let k = r.random_range(1..=8.min(n));
        let d = r.random_range(1..6);
        let x = random_matrix(&mut r, n, d, 10.0);
        let cfg = KMeansConfig {
            k,
            n_restarts: 1,
            seed: s,
            ..Default::default()
        };
        let res = kmeans_array(x.view(), &cfg).unwrap();
        if !res.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) {
            return Err(format!("seed {s}: inertia increased: {:?}", res.trace));
        }
        let mut seeds = res.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != k {
            return Err(format!("seed {s}: repeated k-means++ seeds {:?}", res.seeds));
        }
        runs += 1;
    }
    Ok(format!("{runs} logged runs monotone, k-means++ seeds distinct"))
}

fn co_association_properties() -> Outcome {
    let mut r = rng(6);
    for _ in 0..50 {
        let n = r.random_range(1..40);
        let m = r.random_range(1..8);
        let parts: Vec<Partition> = (0..m)
            .map(|_| {
                let k = r.random_range(1..=n);
                Partition::new(random_labels(&mut r, n, k)).unwrap()
            })
            .collect();
        let co = co_association(&parts).unwrap();
        let a = co.matrix();
        for i in 0..n {
            if a[[i, i]] != 1.0 {
                return Err("diagonal is not 1".into());
            }
            for j in 0..n {
                let q = a[[i, j]] * m as f64;
                if a[[i, j]] != a[[j, i]] || (q - q.round()).abs() > 1e-9 {
                    return Err(format!("entry ({i},{j}) = {} breaks symmetry or 1/M steps", a[[i, j]]));
                }
            }
        }
    }
    let (x, _) = random_blobs(5, 12, 6, 12.0, 7).unwrap();
    let view = ViewMatrix::new(x, "a", "raw").unwrap();
    let single = agglomerative(&view, &AggConfig::new(5, Linkage::Ward)).unwrap();
    let ds = MultiViewDataset::new(vec![view.clone(), view.clone(), view], None, None).unwrap();
    let cons = mvec_with(&ds, 5, &AggConfig::new(5, Linkage::Ward), &MvecOptions::default())
        .unwrap()
        .partition;
    let agree = nmi(&single, &cons).unwrap();
    check(
        agree == 1.0,
        format!("symmetric, unit diagonal, 1/M quantized; duplicated-view MVEC vs single view NMI = {agree}"),
    )
}

fn gradient_checks() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let mut r = rng(700 + seed);
        let mut mlp = MlpModel::new(&[5, 3, 3], 1e-3).unwrap();
        randomize(&mut mlp, &mut r, 1.0);
        let c = random_dense(&mut r, 3, 3, 1.0);
        let x = random_matrix(&mut r, 8, 5, 2.0);
        let labels = random_labels(&mut r, 8, 3);
        worst = worst.max(gradient_check(&mlp, &c, &[x.view()], &labels, 1e-5).0);

        let mut net = MvNetModel::with_dims(&[3, 2], &[4, 3], &[4, 3], 1e-3).unwrap();
        randomize(&mut net, &mut r, 1.0);
        let c = random_dense(&mut r, 3, 3, 1.0);
        let a = random_matrix(&mut r, 6, 3, 2.0);
        let b = random_matrix(&mut r, 6, 2, 2.0);
        let labels = random_labels(&mut r, 6, 3);
        let (err, count) = gradient_check(&net, &c, &[a.view(), b.view()], &labels, 1e-5);
        if count > 200 {
            return Err(format!("MVnet instance has {count} parameters"));
        }
        worst = worst.max(err);
    }
    check(worst < 1e-4, format!("max relative error {worst:.2e} over 10 MLP and 10 MVnet instances"))
}

fn jule_loop() -> Outcome {
    let (x, y) = random_blobs(3, 100, 10, 30.0, 42).unwrap();
    let truth = Partition::new(y).unwrap();
    let start = Instant::now();
    let out = run_jule(x.view(), MlpModel::standard(10, 0).unwrap(), &JuleConfig::new(3, 0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let score = nmi(&truth, &out.partition).unwrap();
    let decreasing = out.k_sequence.windows(2).all(|w| w[1] < w[0]) && out.k_sequence.last() == Some(&3);

    let mut r = rng(8);
    let g = Array2::from_shape_fn((500, 8), |_| StandardNormal.sample(&mut r));
    let mut sizes = init_clusters(g.view()).unwrap().sizes();
    sizes.sort_unstable();
    let median = sizes[sizes.len() / 2];

    check(
        decreasing && score >= 0.95 && secs < 120.0 && (2..=6).contains(&median),
        format!(
            "K[t] {:?}; 3-blob NMI {score:.4} in {secs:.1}s; init median size {median}",
            out.k_sequence
        ),
    )
}

fn multi_view_benefit() -> Outcome {
    let gen: ComplementaryBlobs =
        serde_json::from_str(&fs::read_to_string(fixture("complementary_blobs.json")).unwrap()).unwrap();
    let ds = gen.generate().unwrap();
    let truth = ds.label_partition().unwrap();
    let k = gen.n_classes;
    let singles: Vec<f64> = ds
        .views()
        .iter()
        .map(|v| nmi(&truth, &agglomerative(v, &AggConfig::new(k, Linkage::Ward)).unwrap()).unwrap())
        .collect();
    let best = singles.iter().copied().fold(f64::MIN, f64::max);
    let worst = singles.iter().copied().fold(f64::MAX, f64::min);

    let dir = tempfile::tempdir().unwrap();
    let mvec = run_on(&RunConfig::new("fixture", Method::Mvec, k, dir.path().join("mvec")), &ds).unwrap();
    let mut cfg = RunConfig::new("fixture", Method::Mvnet, k, dir.path().join("mvnet"));
    cfg.seed = gen.seed;
    let mvnet = run_on(&cfg, &ds).unwrap();
    let scores = [mvec.metrics.unwrap().nmi, mvnet.metrics.unwrap().nmi];
    let ok = scores.iter().all(|&s| s >= best - 0.05 && s > worst + 0.10);
    check(
        ok,
        format!(
            "single views {singles:.3?}; MVEC {:.4}, MVnet {:.4}",
            scores[0], scores[1]
        ),
    )
}

fn lnet_protocol() -> Outcome {
    let board = ScoreBoard::read_csv(&fixture("lnet_mix_board.csv")).unwrap();
    if board.n_datasets() != 9 || board.n_extractors() != 10 {
        return Err("fixture board must be 9 datasets x 10 extractors".into());
    }
    let first = lnet_leave_one_out(&board).unwrap();
    let second = lnet_leave_one_out(&board).unwrap();
    if first != second {
        return Err("selection is not deterministic".into());
    }
    // argmax of the column means over the other eight datasets, worked out by hand
    let spots = [("UMist", "Densenet201"), ("Birds", "Densenet169")];
    for (holdout, want) in spots {
        let h = board.dataset_index(holdout).unwrap();
        let got = &board.extractor_names[lnet_select(&board, Some(h)).unwrap()];
        if got != want {
            return Err(format!("holdout {holdout}: got {got}, expected {want}"));
        }
    }
    let names: Vec<&str> = first.iter().map(|&i| board.extractor_names[i].as_str()).collect();
    Ok(format!("deterministic; leave-one-out picks {names:?}"))
}

fn parallel_time_model() -> Outcome {
    let tb = TimingBreakdown::new(vec![3.0, 5.0], vec![2.0, 1.0], 4.0, 2).unwrap();
    let v = estimate_parallel_time(&tb);
    check(v == 10.0, format!("t1=[3,5], t2=[2,1], t3=4 gives {v}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let gen = ComplementaryBlobs {
        n_per_class: 20,
        ..Default::default()
    };
    let manifest = save_dataset(&gen.generate().unwrap(), &dir.path().join("data")).unwrap();
    for method in Method::ALL {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let mut cfg = RunConfig::new(&manifest, method, 4, dir.path().join(format!("{method}{rep}")));
            cfg.seed = 23;
            cfg.jule.epochs_per_period = 3;
            run(&cfg).map_err(|e| format!("{method}: {e}"))?;
            bytes.push(fs::read(cfg.output.join("partition.csv")).unwrap());
        }
        if bytes[0] != bytes[1] {
            return Err(format!("{method} partition CSVs differ between runs"));
        }
    }
    Ok(format!("{} methods byte-identical across repeated runs", Method::ALL.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("metric oracle suite", metric_oracles),
        ("NMI properties", nmi_properties),
        ("agglomerative vs recompute oracle", agglomerative_oracle),
        ("agglomerative at N = 7200", agglomerative_scale),
        ("k-means monotone inertia, distinct seeds", kmeans_properties),
        ("co-association properties", co_association_properties),
        ("gradient check", gradient_checks),
        ("JULE loop", jule_loop),
        ("multi-view benefit", multi_view_benefit),
        ("LNet protocol", lnet_protocol),
        ("parallel time estimate", parallel_time_model),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
