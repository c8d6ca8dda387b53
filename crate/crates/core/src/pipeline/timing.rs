use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wall-clock accounting of one run, in seconds.
///
/// `extract_seconds[j]` is the feature extraction time of view `j` (zero when
/// the manifest does not record it), `cluster_seconds[j]` the per-view
/// clustering time and `consensus_seconds` the final merge or consensus
/// stage. `workers` is the number of views processed concurrently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub extract_seconds: Vec<f64>,
    pub cluster_seconds: Vec<f64>,
    pub consensus_seconds: f64,
    pub workers: usize,
    #[serde(default)]
    pub wall_seconds: f64,
}

impl TimingBreakdown {
    pub fn new(extract_seconds: Vec<f64>, cluster_seconds: Vec<f64>, consensus_seconds: f64, workers: usize) -> Result<Self> {
        let tb = TimingBreakdown {
            extract_seconds,
            cluster_seconds,
            consensus_seconds,
            workers,
            wall_seconds: 0.0,
        };
        tb.validate()?;
        Ok(tb)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        let all = self
            .extract_seconds
            .iter()
            .chain(&self.cluster_seconds)
            .chain(std::iter::once(&self.consensus_seconds));
        for &t in all {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("timings must be finite and non-negative, got {t}")));
            }
        }
        Ok(())
    }

    pub fn n_views(&self) -> usize {
        self.extract_seconds.len().max(self.cluster_seconds.len())
    }
}

/// Estimated wall time when views run `workers` at a time:
/// `ceil(m / workers) * max_j(t1[j] + t2[j]) + t3`.
pub fn estimate_parallel_time(tb: &TimingBreakdown) -> f64 {
    let m = tb.n_views();
    let workers = tb.workers.max(1);
    let per_view = (0..m)
        .map(|j| tb.extract_seconds.get(j).copied().unwrap_or(0.0) + tb.cluster_seconds.get(j).copied().unwrap_or(0.0))
        .fold(0.0, f64::max);
    m.div_ceil(workers) as f64 * per_view + tb.consensus_seconds
}
