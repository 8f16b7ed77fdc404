//! Experiment orchestration: configs, per-seed runs, result tables and
//! front files.
//!
//! Layout of one experiment under `output_dir`:
//!
//! ```text
//! manifest.jsonl              one line per finished run
//! {hash}/config.json          canonical config
//! {hash}/{seed}/checkpoint.txt
//! {hash}/{seed}/trace.jsonl
//! {hash}/{seed}/record.json
//! ```

mod checkpoint;
mod config;

pub use checkpoint::Checkpoint;
pub use config::{
    Bandwidth, ExperimentConfig, IdealMode, KernelConfig, Method, NetworkConfig, OptimizerKind,
    ResolvedRun, ScheduleConfig,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::engine::{self, evaluate_rays};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::nnet::simplex_grid;

/// Metrics of one network on one evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayMetrics {
    pub rays: usize,
    #[serde(flatten)]
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Outcome of one (config, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub problem: String,
    pub method: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub metrics: Vec<RayMetrics>,
    pub wall_clock_seconds: f64,
    pub checkpoint: Option<PathBuf>,
}

impl RunRecord {
    pub fn metric(&self, rays: usize) -> Option<&MetricsReport> {
        self.metrics.iter().find(|m| m.rays == rays).map(|m| &m.report)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Writes through a sibling temp file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    // a single write keeps concurrent appends from interleaving
    f.write_all(format!("{line}\n").as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct ManifestLine<'a> {
    config_hash: &'a str,
    seed: u64,
    method: &'a str,
    problem: &'a str,
    status: RunStatus,
    record: PathBuf,
}

/// Trains and evaluates every seed of `cfg`. Failed seeds produce records
/// with `status = failed`; the remaining seeds still run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let root = cfg.output_dir.join(&hash);
    fs::create_dir_all(&root)?;
    write_atomic(&root.join("config.json"), cfg.canonical_text().as_bytes())?;

    let mut records = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let record = run_seed(cfg, &hash, &root, seed)?;
        let record_path = root.join(seed.to_string()).join("record.json");
        let json = serde_json::to_string_pretty(&record).expect("record serialises");
        write_atomic(&record_path, json.as_bytes())?;
        let line = ManifestLine {
            config_hash: &hash,
            seed,
            method: &record.method,
            problem: &record.problem,
            status: record.status,
            record: record_path,
        };
        append_line(
            &cfg.output_dir.join("manifest.jsonl"),
            &serde_json::to_string(&line).expect("manifest serialises"),
        )?;
        records.push(record);
    }
    Ok(records)
}

fn run_seed(cfg: &ExperimentConfig, hash: &str, root: &Path, seed: u64) -> Result<RunRecord> {
    let run = cfg.resolve(seed)?;
    let dir = root.join(seed.to_string());
    fs::create_dir_all(&dir)?;
    info!("{} on {} seed {seed}", cfg.label(), run.problem.name());

    let started = Instant::now();
    let outcome = engine::train(&run.problem, &run.network, &run.scalarization, run.kernel, &run.schedule);
    let elapsed = started.elapsed().as_secs_f64();
    let (state, trace, error) = match outcome {
        Ok(out) => (out.state, out.trace, None),
        Err(failure) => {
            warn!("seed {seed} failed: {}", failure.error);
            (failure.state, failure.trace, Some(failure.error))
        }
    };
    for w in &trace.warnings {
        warn!("{w}");
    }
    write_atomic(&dir.join("trace.jsonl"), trace.to_jsonl().as_bytes())?;

    let ck_path = dir.join("checkpoint.txt");
    let checkpoint = if state.params().iter().all(|p| p.is_finite()) {
        Checkpoint {
            problem: run.problem.clone(),
            scalarization: run.scalarization.clone(),
            net: state,
        }
        .save(&ck_path)?;
        Some(ck_path)
    } else {
        None
    };

    let mut record = RunRecord {
        config_hash: hash.to_string(),
        seed,
        problem: run.problem.name().to_string(),
        method: cfg.label(),
        status: RunStatus::Ok,
        error: None,
        metrics: Vec::new(),
        wall_clock_seconds: elapsed,
        checkpoint,
    };
    if let Some(e) = error {
        record.status = RunStatus::Failed;
        record.error = Some(e.to_string());
        return Ok(record);
    }
    let ck = Checkpoint::load(record.checkpoint.as_ref().expect("finite state was saved"))?;
    for &rays in &cfg.eval_ray_counts {
        record.metrics.push(RayMetrics {
            rays,
            report: evaluate_checkpoint(&ck, rays)?,
        });
    }
    Ok(record)
}

/// Metrics of a checkpointed network on the even `rays`-point grid.
pub fn evaluate_checkpoint(ck: &Checkpoint, rays: usize) -> Result<MetricsReport> {
    engine::assess(&ck.net, &ck.problem, &ck.scalarization, rays)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableShape {
    /// Rows are ray counts, columns are methods (single problem).
    Med,
    /// Rows are problems, columns are methods; HV at the largest ray count.
    Hv,
}

impl std::str::FromStr for TableShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "med" | "med_table" => Ok(TableShape::Med),
            "hv" | "hv_table" => Ok(TableShape::Hv),
            other => Err(Error::Config(format!("unknown table shape '{other}' (expected med or hv)"))),
        }
    }
}

/// Mean and sample standard deviation; the deviation is `NaN` below two
/// samples.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:e}"),
        _ => String::new(),
    }
}

/// CSV shaped like the paper's tables: mean over seeds per cell with a
/// `<method>_sd` companion column. Failed runs are skipped.
pub fn emit_table(records: &[RunRecord], shape: TableShape) -> Result<String> {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.status == RunStatus::Ok).collect();
    let methods: BTreeSet<&str> = ok.iter().map(|r| r.method.as_str()).collect();
    let row_key = match shape {
        TableShape::Med => "rays",
        TableShape::Hv => "problem",
    };
    let mut out = String::from(row_key);
    for m in &methods {
        out.push_str(&format!(",{m},{m}_sd"));
    }
    out.push('\n');

    match shape {
        TableShape::Med => {
            let problems: BTreeSet<&str> = ok.iter().map(|r| r.problem.as_str()).collect();
            if problems.len() > 1 {
                return Err(Error::Contract(format!(
                    "MED table needs records from a single problem, got {problems:?}"
                )));
            }
            let counts: BTreeSet<usize> = ok.iter().flat_map(|r| r.metrics.iter().map(|m| m.rays)).collect();
            for rays in counts {
                out.push_str(&rays.to_string());
                for m in &methods {
                    let vals: Vec<f64> = ok
                        .iter()
                        .filter(|r| r.method == *m)
                        .filter_map(|r| r.metric(rays).and_then(|x| x.med))
                        .collect();
                    push_stats(&mut out, &vals);
                }
                out.push('\n');
            }
        }
        TableShape::Hv => {
            let mut by_problem: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
            for r in &ok {
                by_problem.entry(r.problem.as_str()).or_default().push(r);
            }
            for (problem, recs) in by_problem {
                out.push_str(problem);
                for m in &methods {
                    let vals: Vec<f64> = recs
                        .iter()
                        .filter(|r| r.method == *m)
                        .filter_map(|r| r.metrics.iter().max_by_key(|x| x.rays).map(|x| x.report.hv))
                        .collect();
                    push_stats(&mut out, &vals);
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

fn push_stats(out: &mut String, vals: &[f64]) {
    if vals.is_empty() {
        out.push_str(",,");
    } else {
        let (mean, sd) = mean_sd(vals);
        out.push_str(&format!(",{},{}", cell(Some(mean)), cell(Some(sd))));
    }
}

/// Loads every `record.json` matching a glob pattern, in path order.
pub fn load_records(pattern: &str) -> Result<Vec<RunRecord>> {
    let paths = glob::glob(pattern).map_err(|e| Error::Config(format!("glob '{pattern}': {e}")))?;
    let mut paths: Vec<PathBuf> = paths
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Io(e.to_string()))?;
    paths.sort();
    paths.iter().map(|p| RunRecord::load(p)).collect()
}

/// The learned front on the `rays`-point grid, one whitespace-separated
/// point per line, and the matching rays. Returns the two file paths.
pub fn emit_front(ck: &Checkpoint, rays: usize, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let grid = simplex_grid(ck.problem.m, rays)?;
    let front = evaluate_rays(&ck.net, &ck.problem, &grid)?;
    let lines = |rows: Vec<&[f64]>| -> String {
        rows.iter()
            .map(|r| r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ") + "\n")
            .collect()
    };
    let front_path = out_dir.join(format!("front_{}.txt", grid.len()));
    let ray_path = out_dir.join(format!("rays_{}.txt", grid.len()));
    write_atomic(&front_path, lines(front.iter().map(|f| &f[..]).collect()).as_bytes())?;
    write_atomic(&ray_path, lines(grid.iter().map(|r| r.weights()).collect()).as_bytes())?;
    Ok((front_path, ray_path))
}
