use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::experiments::ExperimentKind;
use super::record::{ExperimentReport, TrialRecord};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "HEAVYBAND_WORKERS";

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// One unit of work: a pilot or evaluation trial at one size.
#[derive(Debug, Clone, Copy)]
struct Job {
    n: usize,
    pilot: bool,
    trial: usize,
    seed: u64,
}

fn jobs(kind: ExperimentKind, cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for (pos, &n) in cfg.n_list.iter().enumerate() {
        if kind.needs_pilot(cfg) && (pos == 0 || !kind.pooled_calibration()) {
            let seed0 = cfg.calibration.pilot_seed;
            out.extend((0..cfg.calibration.pilot_trials).map(|t| Job {
                n,
                pilot: true,
                trial: t,
                seed: derive_seed(seed0, n as u64, t as u64),
            }));
        }
        out.extend((0..cfg.trials).map(|t| Job {
            n,
            pilot: false,
            trial: t,
            seed: derive_seed(cfg.master_seed, n as u64, t as u64),
        }));
    }
    out
}

fn experiment_kind(cfg: &ExperimentConfig) -> Result<ExperimentKind> {
    let kind = ExperimentKind::from_name(&cfg.experiment)
        .ok_or_else(|| Error::Config(format!("unknown experiment '{}'", cfg.experiment)))?;
    cfg.validate()?;
    kind.check(cfg)?;
    Ok(kind)
}

fn worker_count() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

/// Runs every trial of the experiment, passing finished records to `sink`
/// in job order, and returns them in that order.
fn execute(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
    mut sink: impl FnMut(&TrialRecord) -> Result<()>,
) -> Result<Vec<TrialRecord>> {
    let jobs = jobs(kind, cfg);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = worker_count()? {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<(usize, Result<TrialRecord>)>();
    std::thread::scope(|scope| {
        let jobs = &jobs;
        scope.spawn(move || {
            pool.install(|| {
                jobs.par_iter().enumerate().for_each_with(tx, |tx, (idx, job)| {
                    let start = Instant::now();
                    let rec = kind.trial(cfg, job.n, job.seed).and_then(|mut r| {
                        r.trial = job.trial;
                        r.pilot = job.pilot;
                        r.wall_time = start.elapsed().as_secs_f64();
                        r.validate()?;
                        Ok(r)
                    });
                    let _ = tx.send((idx, rec));
                });
            });
        });
        // Single consumer: records are released in job order.
        let mut pending: BTreeMap<usize, TrialRecord> = BTreeMap::new();
        let mut out = Vec::with_capacity(jobs.len());
        let mut first_err = None;
        for (idx, rec) in rx {
            match rec {
                Ok(r) => {
                    pending.insert(idx, r);
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
            while let Some(r) = pending.remove(&out.len()) {
                if first_err.is_none() {
                    if let Err(e) = sink(&r) {
                        first_err = Some(e);
                    }
                }
                out.push(r);
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    })
}

/// Regenerates the report from trial records; the records are the source
/// of truth.
pub fn report_from_records(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<ExperimentReport> {
    let kind = experiment_kind(cfg)?;
    let mut per_n = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let mut eval: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n && !r.pilot).collect();
        let pilot_n = if kind.pooled_calibration() { cfg.n_list[0] } else { n };
        let mut pilot: Vec<&TrialRecord> = records.iter().filter(|r| r.n == pilot_n && r.pilot).collect();
        eval.sort_by_key(|r| r.trial);
        pilot.sort_by_key(|r| r.trial);
        per_n.push(kind.aggregate(cfg, n, &eval, &pilot));
    }
    let verdicts = kind.verdicts(cfg, &per_n);
    Ok(ExperimentReport {
        config: cfg.clone(),
        per_n,
        verdicts,
    })
}

/// Records and report of a run, without touching the file system.
pub fn run_in_memory(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, ExperimentReport)> {
    let kind = experiment_kind(cfg)?;
    let records = execute(kind, cfg, |_| Ok(()))?;
    let report = report_from_records(cfg, &records)?;
    Ok((records, report))
}

/// Paths written by [`run_to_dir`].
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub trials: PathBuf,
    pub report: PathBuf,
    pub summary: PathBuf,
}

/// Runs the experiment, streaming records to `trials.jsonl` in `dir` and
/// then writing `report.json` and `summary.csv`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<(ExperimentReport, RunOutputs)> {
    let kind = experiment_kind(cfg)?;
    std::fs::create_dir_all(dir)?;
    let outputs = RunOutputs {
        trials: dir.join(TRIALS_FILE),
        report: dir.join(REPORT_FILE),
        summary: dir.join(SUMMARY_FILE),
    };
    let mut w = BufWriter::new(File::create(&outputs.trials)?);
    let records = execute(kind, cfg, |r| {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    })?;
    drop(w);
    let report = report_from_records(cfg, &records)?;
    std::fs::write(&outputs.report, serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(&outputs.summary, report.summary_csv())?;
    Ok((report, outputs))
}

/// Runs the experiment into the configured `output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_to_dir(cfg, &cfg.output_dir).map(|(r, _)| r)
}

/// Reads a trial JSONL file.
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = serde_json::from_str(&line)?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

fn run_named(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    if ExperimentKind::from_name(&cfg.experiment) != Some(kind) {
        return Err(Error::Config(format!(
            "config names experiment '{}', expected '{}'",
            cfg.experiment,
            kind.name()
        )));
    }
    run_in_memory(cfg).map(|(_, r)| r)
}

pub fn run_local_law(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_named(cfg, ExperimentKind::LocalLaw)
}

pub fn run_trace_law(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_named(cfg, ExperimentKind::TraceLaw)
}

pub fn run_entrywise_failure(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_named(cfg, ExperimentKind::EntrywiseFailure)
}

pub fn run_boundedness(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_named(cfg, ExperimentKind::Boundedness)
}

pub fn run_spectral_statistics(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_named(cfg, ExperimentKind::SpectralStatistics)
}

pub fn run_concentration(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_named(cfg, ExperimentKind::Concentration)
}
