//! External clustering validation metrics.
//!
//! Every metric compares a predicted [`Partition`] against ground truth and
//! is invariant to relabeling of either side. NMI, purity and accuracy are
//! computed from a shared [`ContingencyTable`]; the Fowlkes-Mallows family
//! uses pair counts derived from the same table.

use serde::{Deserialize, Serialize, Serializer};

use crate::assignment::max_weight_assignment;
use crate::dataset::Partition;
use crate::error::{Error, Result};

/// `counts[c][y]`: number of samples in predicted cluster `c` and true class `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

impl ContingencyTable {
    pub fn new(y_true: &Partition, y_pred: &Partition) -> Result<Self> {
        check_lengths(y_true, y_pred)?;
        let mut counts = vec![vec![0u64; y_true.k()]; y_pred.k()];
        for (&t, &p) in y_true.assignments().iter().zip(y_pred.assignments()) {
            counts[p][t] += 1;
        }
        Ok(ContingencyTable {
            counts,
            n: y_true.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Predicted cluster sizes.
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// True class sizes.
    pub fn col_sums(&self) -> Vec<u64> {
        let k_true = self.counts.first().map_or(0, Vec::len);
        (0..k_true).map(|y| self.counts.iter().map(|r| r[y]).sum()).collect()
    }

    pub fn nmi(&self) -> f64 {
        let n = self.n as f64;
        let entropy = |sizes: &[u64]| -> f64 {
            sizes
                .iter()
                .filter(|&&s| s > 0)
                .map(|&s| {
                    let p = s as f64 / n;
                    -p * p.ln()
                })
                .sum()
        };
        let rows = self.row_sums();
        let cols = self.col_sums();
        let h_pred = entropy(&rows);
        let h_true = entropy(&cols);
        if h_pred + h_true == 0.0 {
            // both partitions are a single cluster
            return 1.0;
        }
        let mut mi = 0.0;
        for (c, row) in self.counts.iter().enumerate() {
            for (y, &nij) in row.iter().enumerate() {
                if nij == 0 {
                    continue;
                }
                let nij = nij as f64;
                mi += nij / n * (n * nij / (rows[c] as f64 * cols[y] as f64)).ln();
            }
        }
        (2.0 * mi / (h_pred + h_true)).clamp(0.0, 1.0)
    }

    pub fn purity(&self) -> f64 {
        let hits: u64 = self.counts.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
        hits as f64 / self.n as f64
    }

    pub fn accuracy(&self) -> f64 {
        let weights: Vec<Vec<i64>> = self
            .counts
            .iter()
            .map(|r| r.iter().map(|&c| c as i64).collect())
            .collect();
        let (hits, _) = max_weight_assignment(&weights);
        hits as f64 / self.n as f64
    }

    /// `(TP, TP + FP, TP + FN)` over unordered sample pairs.
    pub fn pair_counts(&self) -> (u64, u64, u64) {
        let pairs = |x: u64| x * x.saturating_sub(1) / 2;
        let tp = self.counts.iter().flatten().map(|&c| pairs(c)).sum();
        let pred = self.row_sums().into_iter().map(pairs).sum();
        let truth = self.col_sums().into_iter().map(pairs).sum();
        (tp, pred, truth)
    }

    pub fn fmi(&self) -> f64 {
        let (tp, pred, truth) = self.pair_counts();
        fm_ratio(tp, pred, truth)
    }
}

fn fm_ratio(tp: u64, pred: u64, truth: u64) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    tp as f64 / ((pred as f64) * (truth as f64)).sqrt()
}

fn check_lengths(a: &Partition, b: &Partition) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

fn check_pairs(y_true: &Partition, y_pred: &Partition) -> Result<()> {
    check_lengths(y_true, y_pred)?;
    if y_true.len() < 2 {
        return Err(Error::invalid("pair-counting metrics need at least two samples"));
    }
    Ok(())
}

/// Normalized mutual information, `2 I(Y;C) / (H(Y) + H(C))`.
pub fn nmi(y_true: &Partition, y_pred: &Partition) -> Result<f64> {
    Ok(ContingencyTable::new(y_true, y_pred)?.nmi())
}

/// Fraction of samples belonging to the dominant class of their cluster.
pub fn purity(y_true: &Partition, y_pred: &Partition) -> Result<f64> {
    Ok(ContingencyTable::new(y_true, y_pred)?.purity())
}

/// Best one-to-one cluster-to-class matching accuracy.
pub fn accuracy(y_true: &Partition, y_pred: &Partition) -> Result<f64> {
    Ok(ContingencyTable::new(y_true, y_pred)?.accuracy())
}

/// Fowlkes-Mallows index, `TP / sqrt((TP + FP)(TP + FN))`; 0 when `TP = 0`.
pub fn fmi(y_true: &Partition, y_pred: &Partition) -> Result<f64> {
    check_pairs(y_true, y_pred)?;
    Ok(ContingencyTable::new(y_true, y_pred)?.fmi())
}

/// Per-sample true-positive counts `TP_i` together with the sample's
/// predicted-pair and true-pair counts.
fn local_counts_from(table: &ContingencyTable, y_true: &Partition, y_pred: &Partition) -> Vec<(u64, u64, u64)> {
    let rows = table.row_sums();
    let cols = table.col_sums();
    y_true
        .assignments()
        .iter()
        .zip(y_pred.assignments())
        .map(|(&t, &p)| (table.counts[p][t] - 1, rows[p] - 1, cols[t] - 1))
        .collect()
}

/// Per-sample `(TP_i, pred_i, true_i)`: for sample `i`, the number of other
/// samples sharing both its cluster and class, its cluster, and its class.
pub fn local_pair_counts(y_true: &Partition, y_pred: &Partition) -> Result<Vec<(u64, u64, u64)>> {
    check_pairs(y_true, y_pred)?;
    let table = ContingencyTable::new(y_true, y_pred)?;
    Ok(local_counts_from(&table, y_true, y_pred))
}

/// Fowlkes-Mallows score of each sample over the pairs that contain it.
pub fn fmi_local(y_true: &Partition, y_pred: &Partition) -> Result<Vec<f64>> {
    check_pairs(y_true, y_pred)?;
    let table = ContingencyTable::new(y_true, y_pred)?;
    Ok(local_counts_from(&table, y_true, y_pred)
        .into_iter()
        .map(|(tp, pred, truth)| fm_ratio(tp, pred, truth))
        .collect())
}

/// Mean local Fowlkes-Mallows score over the members of each true class.
pub fn fm_per_class(y_true: &Partition, y_pred: &Partition) -> Result<Vec<f64>> {
    let local = fmi_local(y_true, y_pred)?;
    let mut sums = vec![0.0; y_true.k()];
    let sizes = y_true.sizes();
    for (&t, v) in y_true.assignments().iter().zip(&local) {
        sums[t] += v;
    }
    sums.iter()
        .zip(&sizes)
        .enumerate()
        .map(|(k, (s, &n))| {
            if n == 0 {
                Err(Error::invalid(format!("class {k} is empty")))
            } else {
                Ok(s / n as f64)
            }
        })
        .collect()
}

/// Equal-weight mean of NMI, purity and accuracy.
pub fn mix(nmi: f64, pur: f64, acc: f64) -> Result<f64> {
    for (name, v) in [("nmi", nmi), ("pur", pur), ("acc", acc)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    Ok((nmi + pur + acc) / 3.0)
}

fn round4<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e4).round() / 1e4)
}

/// All five scores for one (method, dataset) pair. Serialized values are
/// rounded to four decimals; the struct keeps full precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(serialize_with = "round4")]
    pub nmi: f64,
    #[serde(serialize_with = "round4")]
    pub pur: f64,
    #[serde(serialize_with = "round4")]
    pub acc: f64,
    #[serde(serialize_with = "round4")]
    pub fmi: f64,
    #[serde(serialize_with = "round4")]
    pub mix: f64,
}

impl MetricsReport {
    /// Computes every score from a single contingency table.
    pub fn compute(y_true: &Partition, y_pred: &Partition) -> Result<Self> {
        let table = ContingencyTable::new(y_true, y_pred)?;
        let (nmi, pur, acc) = (table.nmi(), table.purity(), table.accuracy());
        let fmi = if y_true.len() >= 2 { table.fmi() } else { 0.0 };
        Ok(MetricsReport {
            nmi,
            pur,
            acc,
            fmi,
            mix: mix(nmi, pur, acc)?,
        })
    }
}
