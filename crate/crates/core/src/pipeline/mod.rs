//! Config-driven runs: method dispatch, output files, representation
//! evaluation and plotting of finished runs.
//!
//! A run directory holds
//!
//! * `partition.csv`: `sample_id,cluster`, one row per sample,
//! * `metrics.json` and `labels.csv` when the dataset has labels,
//! * `trace.jsonl`, `latent.fvb`, `model/` and `representation.json` for
//!   the deep methods,
//! * `coassoc.fvb` for `mvec` when requested,
//! * `timing.json` and `provenance.json` always.

pub mod plot;
pub mod timing;

pub use timing::{estimate_parallel_time, TimingBreakdown};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::cluster::{agglomerative, kmeans, AggConfig, KMeansConfig, Linkage};
use crate::consensus::{check_dense_budget, cluster_each_view, co_association, mvec_with, CoAssociationMatrix, MvecOptions, DEFAULT_MEMORY_BUDGET};
use crate::dataset::{concatenate_views, load_dataset, read_fvb, write_fvb, MultiViewDataset, Partition, ViewMatrix};
use crate::error::{Error, Result};
use crate::jule::{run_dmvc_traced, run_jule_with, DmvcModel, DmvcVariant, JuleConfig, TraceRecord};
use crate::metrics::{nmi, MetricsReport};
use crate::neural::{save_checkpoint, CheckpointModel, MlpModel};

pub const PARTITION_FILE: &str = "partition.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const LATENT_FILE: &str = "latent.fvb";
pub const MODEL_DIR: &str = "model";
pub const REPRESENTATION_FILE: &str = "representation.json";
pub const COASSOC_FILE: &str = "coassoc.fvb";
pub const TIMING_FILE: &str = "timing.json";
pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kmeans,
    Agg,
    Mvec,
    JuleSingle,
    Cc,
    MvnetFix,
    Mvnet,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Kmeans,
        Method::Agg,
        Method::Mvec,
        Method::JuleSingle,
        Method::Cc,
        Method::MvnetFix,
        Method::Mvnet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Kmeans => "kmeans",
            Method::Agg => "agg",
            Method::Mvec => "mvec",
            Method::JuleSingle => "jule_single",
            Method::Cc => "cc",
            Method::MvnetFix => "mvnet_fix",
            Method::Mvnet => "mvnet",
        }
    }

    /// Methods that consume every view rather than one input matrix.
    pub fn is_multi_view(self) -> bool {
        matches!(self, Method::Mvec | Method::Cc | Method::MvnetFix | Method::Mvnet)
    }

    pub fn is_deep(self) -> bool {
        matches!(self, Method::JuleSingle | Method::Cc | Method::MvnetFix | Method::Mvnet)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method {s:?}; expected one of kmeans, agg, mvec, jule_single, cc, mvnet_fix, mvnet"
                ))
            })
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("run")
}

fn default_budget() -> u64 {
    DEFAULT_MEMORY_BUDGET
}

/// One run, as read from a JSON config file.
///
/// `k` and `seed` override the corresponding fields of the `kmeans` and
/// `jule` sub-configs. `view` selects one view for the single-view methods;
/// without it they run on the concatenation of all views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub method: Method,
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub view: Option<usize>,
    #[serde(default)]
    pub linkage: Linkage,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub jule: JuleConfig,
    /// Views processed concurrently; defaults to the available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_budget")]
    pub memory_budget: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub export_coassoc: bool,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, method: Method, k: usize, output: impl Into<PathBuf>) -> Self {
        RunConfig {
            dataset: dataset.into(),
            method,
            k,
            seed: 0,
            view: None,
            linkage: Linkage::default(),
            kmeans: KMeansConfig::default(),
            jule: JuleConfig::default(),
            workers: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            output: output.into(),
            export_coassoc: false,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            seed: self.seed,
            ..self.kmeans
        }
    }

    pub fn jule_config(&self) -> JuleConfig {
        let mut c = self.jule;
        c.k_target = self.k;
        c.train.seed = self.seed;
        c
    }

    /// Checks the config on its own.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.view.is_some() && self.method.is_multi_view() {
            return Err(Error::Config(format!(
                "`view` only applies to single-view methods, not {}",
                self.method
            )));
        }
        if self.method == Method::Kmeans {
            let km = self.kmeans_config();
            if km.n_restarts == 0 || km.max_iter == 0 || !(km.tol >= 0.0) {
                return Err(Error::Config(
                    "kmeans needs n_restarts >= 1, max_iter >= 1 and tol >= 0".into(),
                ));
            }
        }
        if self.method.is_deep() {
            self.jule_config()
                .validate()
                .map_err(|e| Error::Config(format!("jule config: {e}")))?;
        }
        Ok(())
    }

    /// Checks the config against the loaded dataset.
    pub fn validate_for(&self, ds: &MultiViewDataset) -> Result<()> {
        self.validate()?;
        let n = ds.n_samples();
        if self.k > n {
            return Err(Error::Config(format!("k = {} exceeds the sample count {n}", self.k)));
        }
        if ds.n_views() == 0 {
            return Err(Error::Config(format!("{} needs at least one view", self.method)));
        }
        if let Some(j) = self.view {
            if j >= ds.n_views() {
                return Err(Error::Config(format!(
                    "view {j} out of range; the dataset has {} views",
                    ds.n_views()
                )));
            }
        }
        if self.method.is_deep() && n < 2 {
            return Err(Error::Config("deep clustering needs at least two samples".into()));
        }
        Ok(())
    }
}

/// Tool name and version recorded in every run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub n_samples: usize,
    pub views: Vec<ProvenanceView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceView {
    pub extractor: String,
    pub layer: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    #[serde(flatten)]
    pub breakdown: TimingBreakdown,
    pub estimated_parallel_seconds: f64,
}

/// K-means NMI of the representation and of the raw input, for deep runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub latent_nmi: f64,
    pub input_nmi: f64,
}

/// One line of `trace.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub stage: String,
    #[serde(flatten)]
    pub record: TraceRecord,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output: PathBuf,
    pub partition: Partition,
    pub metrics: Option<MetricsReport>,
    pub timing: TimingBreakdown,
    pub files: Vec<PathBuf>,
}

struct MethodOutput {
    partition: Partition,
    timing: TimingBreakdown,
    latent: Option<Array2<f64>>,
    model: Option<CheckpointModel>,
    traces: Vec<(String, Vec<TraceRecord>)>,
    coassoc: Option<CoAssociationMatrix>,
}

impl MethodOutput {
    fn plain(partition: Partition, timing: TimingBreakdown) -> Self {
        MethodOutput {
            partition,
            timing,
            latent: None,
            model: None,
            traces: Vec::new(),
            coassoc: None,
        }
    }
}

/// Loads the dataset named by the config and runs it.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    run_on(cfg, &ds)
}

/// Runs `cfg` on an already loaded dataset and writes the run directory.
pub fn run_on(cfg: &RunConfig, ds: &MultiViewDataset) -> Result<RunReport> {
    cfg.validate_for(ds)?;
    let start = Instant::now();
    let truth = ds.labels().map(|_| ds.label_partition()).transpose()?;
    let mut out = execute(cfg, ds, truth.as_ref())?;
    out.timing.wall_seconds = start.elapsed().as_secs_f64();
    log::info!(
        "{} finished: K = {}, {:.3}s",
        cfg.method,
        out.partition.k(),
        out.timing.wall_seconds
    );
    write_outputs(cfg, ds, truth.as_ref(), out)
}

/// Input matrix of a single-view method.
fn single_input(cfg: &RunConfig, ds: &MultiViewDataset) -> (ViewMatrix, f64) {
    let extract = |j: usize| ds.extract_seconds()[j].unwrap_or(0.0);
    match cfg.view {
        Some(j) => (ds.view(j).clone(), extract(j)),
        None if ds.n_views() == 1 => (ds.view(0).clone(), extract(0)),
        None => (concatenate_views(ds), (0..ds.n_views()).map(extract).sum()),
    }
}

fn view_extract_times(ds: &MultiViewDataset) -> Vec<f64> {
    ds.extract_seconds().iter().map(|t| t.unwrap_or(0.0)).collect()
}

fn ensure_finite(latent: &Array2<f64>) -> Result<()> {
    if latent.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("training diverged: the latent representation is not finite".into()))
    }
}

fn execute(cfg: &RunConfig, ds: &MultiViewDataset, truth: Option<&Partition>) -> Result<MethodOutput> {
    let n = ds.n_samples();
    match cfg.method {
        Method::Kmeans => {
            let (x, t1) = single_input(cfg, ds);
            let t = Instant::now();
            let (partition, _) = kmeans(&x, &cfg.kmeans_config())?;
            let timing = TimingBreakdown::new(vec![t1], vec![t.elapsed().as_secs_f64()], 0.0, 1)?;
            Ok(MethodOutput::plain(partition, timing))
        }
        Method::Agg => {
            check_dense_budget(n, cfg.memory_budget)?;
            let (x, t1) = single_input(cfg, ds);
            let t = Instant::now();
            let partition = agglomerative(&x, &AggConfig::new(cfg.k, cfg.linkage))?;
            let timing = TimingBreakdown::new(vec![t1], vec![t.elapsed().as_secs_f64()], 0.0, 1)?;
            Ok(MethodOutput::plain(partition, timing))
        }
        Method::Mvec => {
            let opts = MvecOptions {
                workers: cfg.workers(),
                memory_budget: cfg.memory_budget,
            };
            let res = mvec_with(ds, cfg.k, &AggConfig::new(cfg.k, cfg.linkage), &opts)?;
            let workers = opts.workers.min(ds.n_views()).max(1);
            let timing = TimingBreakdown::new(
                view_extract_times(ds),
                res.view_timings.per_view_seconds.clone(),
                res.consensus_seconds,
                workers,
            )?;
            let mut out = MethodOutput::plain(res.partition, timing);
            if cfg.export_coassoc {
                out.coassoc = Some(res.co_association);
            }
            Ok(out)
        }
        Method::JuleSingle => {
            check_dense_budget(n, cfg.memory_budget)?;
            let (x, t1) = single_input(cfg, ds);
            let jcfg = cfg.jule_config();
            let t = Instant::now();
            let model = MlpModel::standard(x.dim(), cfg.seed)?;
            let res = run_jule_with(&[x.data()], model, &jcfg, None, truth)?;
            ensure_finite(&res.latent)?;
            let timing = TimingBreakdown::new(vec![t1], vec![t.elapsed().as_secs_f64()], 0.0, 1)?;
            Ok(MethodOutput {
                partition: res.partition,
                timing,
                latent: Some(res.latent),
                model: Some(CheckpointModel::Mlp(res.model)),
                traces: vec![("jule".to_string(), res.trace)],
                coassoc: None,
            })
        }
        Method::Cc | Method::MvnetFix | Method::Mvnet => {
            check_dense_budget(n, cfg.memory_budget)?;
            let variant = match cfg.method {
                Method::Cc => DmvcVariant::Cc,
                Method::MvnetFix => DmvcVariant::MvnetFix,
                _ => DmvcVariant::Mvnet,
            };
            let t = Instant::now();
            let res = run_dmvc_traced(ds, &cfg.jule_config(), variant, truth)?;
            ensure_finite(&res.latent)?;
            let workers = cfg.workers().min(ds.n_views()).max(1);
            let timing = TimingBreakdown::new(view_extract_times(ds), Vec::new(), t.elapsed().as_secs_f64(), workers)?;
            let model = match res.model {
                DmvcModel::Mlp(m) => CheckpointModel::Mlp(m),
                DmvcModel::MvNet(m) => CheckpointModel::MvNet(m),
            };
            Ok(MethodOutput {
                partition: res.partition,
                timing,
                latent: Some(res.latent),
                model: Some(model),
                traces: res.traces,
                coassoc: None,
            })
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `sample_id,cluster` rows.
pub fn write_partition_csv(path: &Path, sample_ids: &[String], partition: &Partition) -> Result<()> {
    if sample_ids.len() != partition.len() {
        return Err(Error::LengthMismatch {
            left: sample_ids.len(),
            right: partition.len(),
        });
    }
    write_id_column(path, "cluster", sample_ids, partition.assignments())
}

fn write_id_column(path: &Path, column: &str, ids: &[String], values: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(["sample_id", column]).map_err(err)?;
    for (id, v) in ids.iter().zip(values) {
        w.write_record([id.as_str(), &v.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a two-column `sample_id,<value>` CSV such as `partition.csv`.
pub fn read_partition_csv(path: &Path) -> Result<(Vec<String>, Vec<usize>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::format(path, format!("expected 2 columns, found {}", rec.len())));
        }
        ids.push(rec[0].to_string());
        values.push(
            rec[1]
                .parse()
                .map_err(|_| Error::format(path, format!("not a cluster index: {:?}", &rec[1])))?,
        );
    }
    Ok((ids, values))
}

fn write_outputs(cfg: &RunConfig, ds: &MultiViewDataset, truth: Option<&Partition>, out: MethodOutput) -> Result<RunReport> {
    let dir = &cfg.output;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    let path = dir.join(PARTITION_FILE);
    write_partition_csv(&path, ds.sample_ids(), &out.partition)?;
    files.push(path);

    let metrics = match truth {
        Some(t) => {
            let report = MetricsReport::compute(t, &out.partition)?;
            let path = dir.join(METRICS_FILE);
            write_json(&path, &report)?;
            files.push(path);
            let path = dir.join(LABELS_FILE);
            write_id_column(&path, "label", ds.sample_ids(), t.assignments())?;
            files.push(path);
            Some(report)
        }
        None => None,
    };

    if !out.traces.is_empty() {
        let path = dir.join(TRACE_FILE);
        let mut text = String::new();
        for (stage, records) in &out.traces {
            for r in records {
                text.push_str(&serde_json::to_string(&TraceLine {
                    stage: stage.clone(),
                    record: *r,
                })?);
                text.push('\n');
            }
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }

    if let Some(latent) = &out.latent {
        let path = dir.join(LATENT_FILE);
        write_fvb(&path, latent.view())?;
        files.push(path);
        if let Some(t) = truth {
            let input = if cfg.method.is_multi_view() {
                concatenate_views(ds)
            } else {
                single_input(cfg, ds).0
            };
            let report = RepresentationReport {
                latent_nmi: eval_representation(latent.view(), t, cfg.k, &[cfg.seed])?,
                input_nmi: eval_representation(input.data(), t, cfg.k, &[cfg.seed])?,
            };
            let path = dir.join(REPRESENTATION_FILE);
            write_json(&path, &report)?;
            files.push(path);
        }
    }

    if let Some(model) = &out.model {
        files.push(save_checkpoint(&dir.join(MODEL_DIR), model, cfg.seed, &cfg.jule_config().train)?);
    }

    if let Some(co) = &out.coassoc {
        let path = dir.join(COASSOC_FILE);
        co.export_fvb(&path)?;
        files.push(path);
    }

    let timing = TimingReport {
        estimated_parallel_seconds: estimate_parallel_time(&out.timing),
        breakdown: out.timing.clone(),
    };
    let path = dir.join(TIMING_FILE);
    write_json(&path, &timing)?;
    files.push(path);

    let provenance = Provenance {
        tool: "mvclust".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        n_samples: ds.n_samples(),
        views: ds
            .views()
            .iter()
            .map(|v| ProvenanceView {
                extractor: v.extractor_name.clone(),
                layer: v.layer_name.clone(),
                dim: v.dim(),
            })
            .collect(),
    };
    let path = dir.join(PROVENANCE_FILE);
    write_json(&path, &provenance)?;
    files.push(path);

    Ok(RunReport {
        output: dir.clone(),
        partition: out.partition,
        metrics,
        timing: out.timing,
        files,
    })
}

/// Mean NMI, over `seeds`, of K-means with `k` clusters on the rows of `x`.
pub fn eval_representation(x: ArrayView2<'_, f64>, labels: &Partition, k: usize, seeds: &[u64]) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if x.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: labels.len(),
        });
    }
    let view = ViewMatrix::from_array(x.to_owned())?;
    let mut total = 0.0;
    for &seed in seeds {
        let (p, _) = kmeans(&view, &KMeansConfig::new(k, seed))?;
        total += nmi(labels, &p)?;
    }
    Ok(total / seeds.len() as f64)
}

/// Per-view base partitions, their co-association matrix, and its export to
/// `path` as an `N x N` view file.
pub fn export_coassoc(ds: &MultiViewDataset, k: usize, linkage: Linkage, workers: usize, memory_budget: u64, path: &Path) -> Result<CoAssociationMatrix> {
    let n = ds.n_samples();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} must lie in 1..={n}")));
    }
    check_dense_budget(n, memory_budget)?;
    let (partitions, _) = cluster_each_view(ds, k, &AggConfig::new(k, linkage), workers)?;
    let co = co_association(&partitions)?;
    co.export_fvb(path)?;
    Ok(co)
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads `trace.jsonl` into per-stage record lists, keeping stage order.
pub fn read_trace(path: &Path) -> Result<Vec<(String, Vec<TraceRecord>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut stages: Vec<(String, Vec<TraceRecord>)> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: TraceLine = serde_json::from_str(line).map_err(|e| Error::format(path, e.to_string()))?;
        match stages.last_mut() {
            Some((s, v)) if *s == rec.stage => v.push(rec.record),
            _ => stages.push((rec.stage, vec![rec.record])),
        }
    }
    Ok(stages)
}

/// Renders SVG charts for the given run directories into `out_dir`:
/// a grouped metrics bar chart across runs, `K[t]` and loss charts per deep
/// run, a PCA scatter of each saved latent matrix, and a representation
/// comparison chart. Fails when no run has anything to plot.
pub fn plot(run_dirs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if run_dirs.is_empty() {
        return Err(Error::invalid("no run directories given"));
    }
    for d in run_dirs {
        if !d.is_dir() {
            return Err(Error::invalid(format!("run directory {} does not exist", d.display())));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, svg: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };

    let mut series = Vec::new();
    let mut values = Vec::new();
    let mut rep_series = Vec::new();
    let mut rep_values = Vec::new();
    for d in run_dirs {
        let name = run_name(d);
        let metrics = d.join(METRICS_FILE);
        if metrics.is_file() {
            let m: MetricsReport = read_json(&metrics)?;
            series.push(name.clone());
            values.push(vec![m.nmi, m.pur, m.acc, m.fmi, m.mix]);
        }
        let rep = d.join(REPRESENTATION_FILE);
        if rep.is_file() {
            let r: RepresentationReport = read_json(&rep)?;
            rep_series.push(name.clone());
            rep_values.push(vec![r.input_nmi, r.latent_nmi]);
        }
        let trace = d.join(TRACE_FILE);
        if trace.is_file() {
            let stages = read_trace(&trace)?;
            let k_lines: Vec<(String, Vec<(f64, f64)>)> = stages
                .iter()
                .map(|(s, rs)| (s.clone(), rs.iter().map(|r| (r.t as f64, r.k as f64)).collect()))
                .collect();
            let loss_lines: Vec<(String, Vec<(f64, f64)>)> = stages
                .iter()
                .map(|(s, rs)| (s.clone(), rs.iter().map(|r| (r.t as f64, r.loss)).collect()))
                .collect();
            emit(
                format!("{name}_clusters.svg"),
                plot::line_chart(&format!("{name}: clusters per period"), "period t", "K[t]", &k_lines)?,
            )?;
            emit(
                format!("{name}_loss.svg"),
                plot::line_chart(&format!("{name}: mean loss per period"), "period t", "loss", &loss_lines)?,
            )?;
        }
        let latent = d.join(LATENT_FILE);
        if latent.is_file() {
            let z = read_fvb(&latent)?;
            let groups = [d.join(LABELS_FILE), d.join(PARTITION_FILE)]
                .into_iter()
                .find(|p| p.is_file())
                .map(|p| read_partition_csv(&p).map(|(_, v)| v))
                .transpose()?
                .unwrap_or_else(|| vec![0; z.nrows()]);
            let pts = plot::pca_2d(z.view())?;
            emit(
                format!("{name}_pca.svg"),
                plot::scatter(&format!("{name}: latent PCA"), pts.view(), &groups)?,
            )?;
        }
    }
    if !series.is_empty() {
        let cats: Vec<String> = ["NMI", "PUR", "ACC", "FMI", "MIX"].map(String::from).to_vec();
        emit(
            "metrics.svg".into(),
            plot::grouped_bar_chart("External metrics", &cats, &series, &values)?,
        )?;
    }
    if !rep_series.is_empty() {
        let cats = vec!["input".to_string(), "latent".to_string()];
        let by_space: Vec<Vec<f64>> = rep_values;
        emit(
            "representation.svg".into(),
            plot::grouped_bar_chart("K-means NMI on representations", &cats, &rep_series, &by_space)?,
        )?;
    }
    if written.is_empty() {
        return Err(Error::invalid(
            "nothing to plot: no metrics.json, trace.jsonl or latent.fvb in the given runs",
        ));
    }
    Ok(written)
}
