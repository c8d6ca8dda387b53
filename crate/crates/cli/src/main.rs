use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvclust::dataset::{read_fvb, save_dataset};
use mvclust::jule::EndToEnd;
use mvclust::pipeline::{self, read_partition_csv, Method, RunConfig};
use mvclust::selection::{lnet_select, summarize};
use mvclust::synth::ComplementaryBlobs;
use mvclust::{load_dataset, Error, Linkage, MetricsReport, Partition, Result, ScoreBoard};

#[derive(Parser)]
#[command(name = "mvclust", version, about = "Multi-view clustering of pretrained-network features")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace); RUST_LOG also works.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any method from a JSON config file.
    Run(RunArgs),
    /// Single-view k-means or agglomerative clustering.
    Cluster {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, value_enum, default_value = "agg")]
        method: BaseMethod,
        /// View index; all views are concatenated when omitted.
        #[arg(long)]
        view: Option<usize>,
        #[arg(long)]
        linkage: Option<Linkage>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Co-association consensus over per-view agglomerative clusterings.
    Mvec {
        #[command(flatten)]
        common: RunArgs,
        /// Linkage of the per-view base clusterings.
        #[arg(long)]
        linkage: Option<Linkage>,
        /// Also write the co-association matrix as coassoc.fvb.
        #[arg(long)]
        export_coassoc: bool,
    },
    /// Deep clustering on a single input matrix.
    Jule {
        #[command(flatten)]
        common: RunArgs,
        #[command(flatten)]
        deep: DeepArgs,
        #[arg(long)]
        view: Option<usize>,
    },
    /// Deep multi-view clustering.
    Dmvc {
        #[command(flatten)]
        common: RunArgs,
        #[command(flatten)]
        deep: DeepArgs,
        #[arg(long, value_enum, default_value = "mvnet")]
        variant: Variant,
    },
    /// Score a partition against labels, or a representation with k-means.
    Eval(EvalArgs),
    /// Extractor selection over a board of MIX scores.
    Lnet {
        /// CSV with a `dataset` column and one column per extractor.
        #[arg(long)]
        board: PathBuf,
        /// Dataset to hold out; prints leave-one-out results for all when omitted.
        #[arg(long)]
        holdout: Option<String>,
    },
    /// Render SVG charts for finished runs.
    Plot {
        /// Run output directories.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Write the co-association matrix of per-view clusterings.
    ExportCoassoc {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "ward")]
        linkage: Linkage,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic multi-view dataset with complementary views.
    Synth {
        /// Generator parameters as JSON; defaults are used when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON run config; flags given on the command line override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Memory budget in bytes for dense N x N matrices.
    #[arg(long)]
    memory_budget: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct DeepArgs {
    /// Training epochs per merge period.
    #[arg(long)]
    epochs: Option<usize>,
    /// Cluster-count shrink factor per period.
    #[arg(long)]
    eta: Option<f64>,
    /// Neighbors used by the merge affinity.
    #[arg(long)]
    ks: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum)]
    end_to_end: Option<EndToEndArg>,
    /// Skip the final fine-tuning period at K*.
    #[arg(long)]
    no_finetune: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Partition CSV (`sample_id,cluster`).
    #[arg(long, conflicts_with = "representation")]
    partition: Option<PathBuf>,
    /// Representation matrix (.fvb) to cluster with k-means.
    #[arg(long)]
    representation: Option<PathBuf>,
    /// Dataset manifest providing labels.
    #[arg(long, conflicts_with = "labels")]
    dataset: Option<PathBuf>,
    /// Labels CSV (`sample_id,label`).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Cluster count for representation evaluation; defaults to the label count.
    #[arg(long)]
    k: Option<usize>,
    /// K-means seeds for representation evaluation.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseMethod {
    Kmeans,
    Agg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Cc,
    MvnetFix,
    Mvnet,
}

#[derive(Clone, Copy, ValueEnum)]
enum EndToEndArg {
    Reinit,
    FineTune,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Starts from the config file when given, else from required flags, then
/// applies every flag that was set.
fn build_config(args: &RunArgs, method: Option<Method>) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => {
            let dataset = args
                .dataset
                .clone()
                .ok_or_else(|| config_error("--dataset is required without --config"))?;
            let k = args.k.ok_or_else(|| config_error("--k is required without --config"))?;
            let method = method.ok_or_else(|| config_error("--config is required for `run`"))?;
            RunConfig::new(dataset, method, k, args.out.clone().unwrap_or_else(|| PathBuf::from("run")))
        }
    };
    if let Some(m) = method {
        cfg.method = m;
    }
    if let Some(d) = &args.dataset {
        cfg.dataset = d.clone();
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    if let Some(b) = args.memory_budget {
        cfg.memory_budget = b;
    }
    if let Some(o) = &args.out {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

fn apply_deep(cfg: &mut RunConfig, deep: &DeepArgs) {
    let j = &mut cfg.jule;
    if let Some(e) = deep.epochs {
        j.epochs_per_period = e;
    }
    if let Some(eta) = deep.eta {
        j.shrink_factor = eta;
    }
    if let Some(ks) = deep.ks {
        j.knn_affinity = ks;
    }
    if let Some(lr) = deep.learning_rate {
        j.train.learning_rate = lr;
    }
    if let Some(b) = deep.batch_size {
        j.train.batch_size = b;
    }
    if let Some(e) = deep.end_to_end {
        j.end_to_end = match e {
            EndToEndArg::Reinit => EndToEnd::Reinit,
            EndToEndArg::FineTune => EndToEnd::FineTune,
        };
    }
    if deep.no_finetune {
        j.final_finetune = false;
    }
}

fn execute(cfg: RunConfig) -> Result<()> {
    let report = pipeline::run(&cfg)?;
    let summary = serde_json::json!({
        "method": cfg.method.as_str(),
        "output": report.output,
        "k": report.partition.k(),
        "metrics": report.metrics,
        "estimated_parallel_seconds": pipeline::estimate_parallel_time(&report.timing),
        "wall_seconds": report.timing.wall_seconds,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn load_labels(dataset: Option<&Path>, labels: Option<&Path>) -> Result<(Option<Vec<String>>, Partition)> {
    match (dataset, labels) {
        (Some(d), _) => {
            let ds = load_dataset(d)?;
            let p = ds.label_partition()?;
            Ok((Some(ds.sample_ids().to_vec()), p))
        }
        (None, Some(l)) => {
            let (ids, values) = read_partition_csv(l)?;
            Ok((Some(ids), Partition::from_labels(&values)?))
        }
        (None, None) => Err(config_error("labels are needed: pass --dataset or --labels")),
    }
}

fn eval(args: &EvalArgs) -> Result<()> {
    let (label_ids, truth) = load_labels(args.dataset.as_deref(), args.labels.as_deref())?;
    if let Some(path) = &args.partition {
        let (ids, values) = read_partition_csv(path)?;
        if let Some(expected) = &label_ids {
            if *expected != ids {
                return Err(config_error(format!(
                    "sample ids in {} do not match the labels",
                    path.display()
                )));
            }
        }
        let report = MetricsReport::compute(&truth, &Partition::from_labels(&values)?)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        Ok(())
    } else if let Some(path) = &args.representation {
        let x = read_fvb(path)?;
        let k = args.k.unwrap_or(truth.k());
        let score = pipeline::eval_representation(x.view(), &truth, k, &args.seeds)?;
        println!("{}", serde_json::json!({ "nmi": score, "k": k, "seeds": args.seeds }));
        Ok(())
    } else {
        Err(config_error("pass --partition or --representation"))
    }
}

fn lnet(board: &Path, holdout: Option<&str>) -> Result<()> {
    let board = ScoreBoard::read_csv(board)?;
    match holdout {
        Some(name) => {
            let h = board
                .dataset_index(name)
                .ok_or_else(|| config_error(format!("dataset {name:?} is not on the board")))?;
            let pick = lnet_select(&board, Some(h))?;
            let out = serde_json::json!({
                "holdout": name,
                "lnet": board.extractor_names[pick],
                "index": pick,
                "score": board.scores[h][pick],
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        None => println!("{}", serde_json::to_string_pretty(&summarize(&board)?)?),
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => execute(build_config(&args, None)?),
        Command::Cluster {
            common,
            method,
            view,
            linkage,
            restarts,
        } => {
            let method = match method {
                BaseMethod::Kmeans => Method::Kmeans,
                BaseMethod::Agg => Method::Agg,
            };
            let mut cfg = build_config(&common, Some(method))?;
            if view.is_some() {
                cfg.view = view;
            }
            if let Some(l) = linkage {
                cfg.linkage = l;
            }
            if let Some(r) = restarts {
                cfg.kmeans.n_restarts = r;
            }
            execute(cfg)
        }
        Command::Mvec {
            common,
            linkage,
            export_coassoc,
        } => {
            let mut cfg = build_config(&common, Some(Method::Mvec))?;
            if let Some(l) = linkage {
                cfg.linkage = l;
            }
            cfg.export_coassoc |= export_coassoc;
            execute(cfg)
        }
        Command::Jule { common, deep, view } => {
            let mut cfg = build_config(&common, Some(Method::JuleSingle))?;
            apply_deep(&mut cfg, &deep);
            if view.is_some() {
                cfg.view = view;
            }
            execute(cfg)
        }
        Command::Dmvc { common, deep, variant } => {
            let method = match variant {
                Variant::Cc => Method::Cc,
                Variant::MvnetFix => Method::MvnetFix,
                Variant::Mvnet => Method::Mvnet,
            };
            let mut cfg = build_config(&common, Some(method))?;
            apply_deep(&mut cfg, &deep);
            execute(cfg)
        }
        Command::Eval(args) => eval(&args),
        Command::Lnet { board, holdout } => lnet(&board, holdout.as_deref()),
        Command::Plot { runs, out } => {
            for path in pipeline::plot(&runs, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::ExportCoassoc {
            dataset,
            k,
            linkage,
            workers,
            out,
        } => {
            let ds = load_dataset(&dataset)?;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            if workers == 0 {
                return Err(config_error("--workers must be at least 1"));
            }
            let co = pipeline::export_coassoc(
                &ds,
                k,
                linkage,
                workers,
                mvclust::consensus::DEFAULT_MEMORY_BUDGET,
                &out,
            )?;
            println!("{} ({} x {})", out.display(), co.matrix().nrows(), co.matrix().ncols());
            Ok(())
        }
        Command::Synth { params, out } => {
            let gen: ComplementaryBlobs = match params {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| config_error(format!("{}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", p.display())))?
                }
                None => ComplementaryBlobs::default(),
            };
            let manifest = save_dataset(&gen.generate()?, &out)?;
            println!("{}", manifest.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log_level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
