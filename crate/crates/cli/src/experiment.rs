//! Batch evaluation over random partitions and hyperparameter grids.
//!
//! Every (grid point, partition) pair is an independent task. Tasks run on a
//! rayon pool and results are gathered in task order, so output files do not
//! depend on the number of workers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use lrssc::data::{self, Dataset, OutOfSampleMethod};
use lrssc::graph::cluster_representation;
use lrssc::metrics::MetricReport;
use lrssc::solver::lrssc_solve;
use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, GridPoint};
use crate::error::{CliError, CliResult};

const RUN_STREAM: u64 = 1;
const TUNING_STREAM: u64 = 2;

/// Seed of partition `index` within `stream`; tuning and evaluation draws use
/// different streams.
pub fn partition_seed(seed: u64, stream: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker count from `LRSSC_THREADS`; unset or 0 means one per core.
pub fn threads_from_env() -> CliResult<usize> {
    match std::env::var("LRSSC_THREADS") {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::config(format!(
                "LRSSC_THREADS must be a non-negative integer, got '{v}'"
            ))
        }),
    }
}

/// Per-invocation overrides that are not part of the experiment itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 means one per core.
    pub threads: usize,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub partition: usize,
    pub seed: u64,
    pub in_sample: MetricReport,
    pub out_sample: Option<MetricReport>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

pub fn stats(values: &[f64]) -> Stats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Stats { mean, std }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats {
    pub acc: Stats,
    pub nmi: Stats,
    pub f1: Stats,
}

impl MetricStats {
    fn of(reports: &[MetricReport]) -> Self {
        let col = |f: fn(&MetricReport) -> f64| stats(&reports.iter().map(f).collect::<Vec<_>>());
        Self {
            acc: col(|r| r.acc),
            nmi: col(|r| r.nmi),
            f1: col(|r| r.f1),
        }
    }
}

/// All partitions evaluated at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub point: GridPoint,
    pub partitions: Vec<PartitionResult>,
    pub in_sample: MetricStats,
    pub out_sample: Option<MetricStats>,
    pub mean_iterations: f64,
}

impl RunRecord {
    fn new(point: GridPoint, partitions: Vec<PartitionResult>) -> Self {
        let ins: Vec<MetricReport> = partitions.iter().map(|p| p.in_sample).collect();
        let outs: Vec<MetricReport> = partitions.iter().filter_map(|p| p.out_sample).collect();
        let mean_iterations =
            partitions.iter().map(|p| p.iterations as f64).sum::<f64>() / partitions.len() as f64;
        Self {
            point,
            in_sample: MetricStats::of(&ins),
            out_sample: (outs.len() == partitions.len()).then(|| MetricStats::of(&outs)),
            partitions,
            mean_iterations,
        }
    }
}

/// Files written by a command.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub records: Vec<RunRecord>,
    pub csv: PathBuf,
    pub markdown: Option<PathBuf>,
    pub manifest: PathBuf,
}

/// Winner of a grid search.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub records: Vec<RunRecord>,
    pub best_index: usize,
    pub best_config: ExperimentConfig,
    pub csv: PathBuf,
    pub best_config_path: PathBuf,
    pub manifest: PathBuf,
}

struct Prepared {
    ds: Dataset,
    data_hash: String,
    d: usize,
    method: OutOfSampleMethod,
}

fn prepare(cfg: &ExperimentConfig) -> CliResult<Prepared> {
    let mut ds = cfg.load_dataset()?;
    let data_hash = dataset_hash(&ds);
    if cfg.normalize {
        ds.x = data::normalize_columns(&ds.x).0;
    }
    let d = cfg.ipd_dim(&ds);
    let method = match cfg.out_of_sample_gamma {
        Some(gamma) => OutOfSampleMethod::RidgeEnergy { gamma },
        None => OutOfSampleMethod::default(),
    };
    Ok(Prepared {
        ds,
        data_hash,
        d,
        method,
    })
}

fn dataset_hash(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((ds.x.nrows() as u64).to_le_bytes());
    h.update((ds.x.ncols() as u64).to_le_bytes());
    for v in ds.x.iter() {
        h.update(v.to_le_bytes());
    }
    for &l in &ds.labels {
        h.update((l as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn evaluate(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    point: &GridPoint,
    partition: usize,
    seed: u64,
) -> CliResult<PartitionResult> {
    let spec = cfg.partition_spec(&prep.ds, seed);
    let part = data::sample_partition(&prep.ds, &spec)?;
    let x_in = &part.in_sample.x;
    let solved = lrssc_solve(x_in, &cfg.solver_config(point)?)?;
    let k = part.in_sample.num_clusters();
    let pred = cluster_representation(&solved.c, prep.d, k, seed)?.labels;
    let in_sample = MetricReport::evaluate(&part.in_sample.labels, &pred)?;
    let out_sample = if part.out_sample.is_empty() {
        None
    } else {
        let assigned = data::out_of_sample_assign(x_in, &pred, &part.out_sample.x, prep.method)?;
        Some(MetricReport::evaluate(&part.out_sample.labels, &assigned)?)
    };
    Ok(PartitionResult {
        partition,
        seed,
        in_sample,
        out_sample,
        iterations: solved.iterations,
        converged: solved.converged,
    })
}

fn evaluate_all(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    points: &[GridPoint],
    partitions: usize,
    stream: u64,
    threads: usize,
) -> CliResult<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..partitions).map(move |i| (p, i)))
        .collect();
    let results: Vec<CliResult<PartitionResult>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, i)| {
                let seed = partition_seed(cfg.seed, stream, i as u64);
                evaluate(cfg, prep, &points[p], i, seed)
                    .map_err(|e| e.context(format!("{}, partition {i}", points[p].label())))
            })
            .collect()
    });
    let mut results = results.into_iter();
    points
        .iter()
        .map(|point| {
            let parts = results
                .by_ref()
                .take(partitions)
                .collect::<CliResult<Vec<_>>>()?;
            Ok(RunRecord::new(*point, parts))
        })
        .collect()
}

fn opt_metric(r: Option<MetricReport>, f: fn(&MetricReport) -> f64) -> String {
    r.map(|m| f(&m).to_string()).unwrap_or_default()
}

const RESULTS_HEADER: [&str; 14] = [
    "lambda",
    "mu0",
    "delta",
    "n",
    "partition",
    "seed",
    "acc",
    "nmi",
    "f1",
    "oos_acc",
    "oos_nmi",
    "oos_f1",
    "iterations",
    "converged",
];

/// Per-partition rows, each grid point closed by a `mean` row.
pub fn results_csv(records: &[RunRecord]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER)?;
    for rec in records {
        let [l, m, d, n] = rec.point.csv_fields();
        for p in &rec.partitions {
            w.write_record([
                l.clone(),
                m.clone(),
                d.clone(),
                n.clone(),
                p.partition.to_string(),
                p.seed.to_string(),
                p.in_sample.acc.to_string(),
                p.in_sample.nmi.to_string(),
                p.in_sample.f1.to_string(),
                opt_metric(p.out_sample, |r| r.acc),
                opt_metric(p.out_sample, |r| r.nmi),
                opt_metric(p.out_sample, |r| r.f1),
                p.iterations.to_string(),
                p.converged.to_string(),
            ])?;
        }
        let oos = |f: fn(&MetricStats) -> Stats| {
            rec.out_sample
                .map(|s| f(&s).mean.to_string())
                .unwrap_or_default()
        };
        let converged = rec.partitions.iter().filter(|p| p.converged).count();
        w.write_record([
            l,
            m,
            d,
            n,
            "mean".into(),
            String::new(),
            rec.in_sample.acc.mean.to_string(),
            rec.in_sample.nmi.mean.to_string(),
            rec.in_sample.f1.mean.to_string(),
            oos(|s| s.acc),
            oos(|s| s.nmi),
            oos(|s| s.f1),
            rec.mean_iterations.to_string(),
            format!("{converged}/{}", rec.partitions.len()),
        ])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::from(e.into_error()))?)
        .map_err(|e| CliError::config(e.to_string()))
}

fn cell(s: Stats) -> String {
    format!("{}<sub>{}</sub>", s.mean, s.std)
}

/// Mean with the sample standard deviation in subscript, one row per grid point.
pub fn summary_markdown(name: &str, records: &[RunRecord]) -> String {
    let with_oos = records.iter().any(|r| r.out_sample.is_some());
    let mut s = String::new();
    let _ = writeln!(s, "# {name}\n");
    let _ = writeln!(
        s,
        "Mean over {} partitions; sample standard deviation in subscript.\n",
        records.first().map_or(0, |r| r.partitions.len())
    );
    s.push_str("| lambda | mu0 | delta | n | ACC | NMI | F1 |");
    if with_oos {
        s.push_str(" OOS ACC | OOS NMI | OOS F1 |");
    }
    s.push_str("\n|---|---|---|---|---|---|---|");
    if with_oos {
        s.push_str("---|---|---|");
    }
    s.push('\n');
    for r in records {
        let [l, m, d, n] = r.point.csv_fields();
        let _ = write!(
            s,
            "| {l} | {m} | {d} | {n} | {} | {} | {} |",
            cell(r.in_sample.acc),
            cell(r.in_sample.nmi),
            cell(r.in_sample.f1)
        );
        if with_oos {
            match r.out_sample {
                Some(o) => {
                    let _ = write!(s, " {} | {} | {} |", cell(o.acc), cell(o.nmi), cell(o.f1));
                }
                None => s.push_str(" | | |"),
            }
        }
        s.push('\n');
    }
    s
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::from(e).context(path.display()))
}

fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<PathBuf> {
    let dir = opts
        .output_dir
        .clone()
        .unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&dir).map_err(|e| CliError::from(e).context(dir.display()))?;
    Ok(dir)
}

fn manifest(
    command: &str,
    cfg: &ExperimentConfig,
    prep: &Prepared,
    opts: &RunOptions,
    started: Instant,
) -> String {
    let config_json: serde_json::Value =
        serde_json::from_str(&cfg.to_json()).expect("config is valid json");
    let config_hash = hex::encode(Sha256::digest(cfg.to_json().as_bytes()));
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let value = json!({
        "command": command,
        "seed": cfg.seed,
        "config": config_json,
        "config_sha256": config_hash,
        "data_sha256": prep.data_hash,
        "samples": prep.ds.len(),
        "clusters": prep.ds.num_clusters(),
        "ipd_d": prep.d,
        "out_of_sample_method": prep.method.to_string(),
        "threads": opts.threads,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
        "created_unix": created,
    });
    serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n"
}

/// Evaluates every grid point over `num_partitions` seeded partitions and
/// writes `results.csv`, `summary.md` and `run_manifest.json`.
pub fn cmd_run(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunOutputs> {
    let started = Instant::now();
    let prep = prepare(cfg)?;
    let points = cfg.grid_points();
    let records = evaluate_all(
        cfg,
        &prep,
        &points,
        cfg.num_partitions,
        RUN_STREAM,
        opts.threads,
    )?;
    let dir = output_dir(cfg, opts)?;
    let csv = dir.join("results.csv");
    write_file(&csv, &results_csv(&records)?)?;
    let markdown = dir.join("summary.md");
    write_file(&markdown, &summary_markdown(&prep.ds.name, &records))?;
    let manifest_path = dir.join("run_manifest.json");
    write_file(&manifest_path, &manifest("run", cfg, &prep, opts, started))?;
    Ok(RunOutputs {
        records,
        csv,
        markdown: Some(markdown),
        manifest: manifest_path,
    })
}

/// Index of the best record: highest mean ACC, then NMI, then earliest.
pub fn select_best(records: &[RunRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let (a, o) = (&r.in_sample, &records[b].in_sample);
                a.acc.mean > o.acc.mean || (a.acc.mean == o.acc.mean && a.nmi.mean > o.nmi.mean)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

pub fn grid_csv(records: &[RunRecord]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "lambda",
        "mu0",
        "delta",
        "n",
        "acc",
        "nmi",
        "f1",
        "acc_std",
        "iterations",
    ])?;
    for r in records {
        let [l, m, d, n] = r.point.csv_fields();
        w.write_record([
            l,
            m,
            d,
            n,
            r.in_sample.acc.mean.to_string(),
            r.in_sample.nmi.mean.to_string(),
            r.in_sample.f1.mean.to_string(),
            r.in_sample.acc.std.to_string(),
            r.mean_iterations.to_string(),
        ])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::from(e.into_error()))?)
        .map_err(|e| CliError::config(e.to_string()))
}

/// Scores every grid point on the tuning partitions and writes `grid.csv`,
/// `best_config.json` (a runnable config pinned to the winner) and
/// `grid_manifest.json`.
pub fn cmd_grid(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<GridOutcome> {
    let started = Instant::now();
    let prep = prepare(cfg)?;
    let points = cfg.grid_points();
    let records = evaluate_all(
        cfg,
        &prep,
        &points,
        cfg.tuning_partitions,
        TUNING_STREAM,
        opts.threads,
    )?;
    let best_index = select_best(&records).expect("grid is non-empty");
    let best_config = cfg.pinned(&records[best_index].point);
    let dir = output_dir(cfg, opts)?;
    let csv = dir.join("grid.csv");
    write_file(&csv, &grid_csv(&records)?)?;
    let best_config_path = dir.join("best_config.json");
    write_file(&best_config_path, &(best_config.to_json() + "\n"))?;
    let manifest_path = dir.join("grid_manifest.json");
    write_file(&manifest_path, &manifest("grid", cfg, &prep, opts, started))?;
    Ok(GridOutcome {
        records,
        best_index,
        best_config,
        csv,
        best_config_path,
        manifest: manifest_path,
    })
}
