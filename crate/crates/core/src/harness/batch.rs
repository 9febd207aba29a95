use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::output::{
    bucket_trial, summarize, write_series_csv, write_summary_csv, write_trials_csv, CellSummary, TrialResult,
};
use super::trial::{run_trial, TrialOutcome, TrialRecord};
use crate::error::{Error, Result};
use crate::estimation::write_estimate_trace;
use crate::planner::Platform;
use crate::slamlite::write_class_pgm;
use crate::worldsim::Environment;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    /// Ordered by cell, then trial index.
    pub results: Vec<TrialResult>,
    pub cells: Vec<CellSummary>,
}

impl BatchReport {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.outcome.is_success()).count()
    }
}

fn reduce(platform: Platform, index: usize, seed: u64, cfg: &ExperimentConfig, r: Result<TrialRecord>) -> TrialResult {
    match r.and_then(|rec| bucket_trial(&rec, cfg.duration).map(|s| (rec, s))) {
        Ok((rec, series)) => {
            TrialResult { platform, index, seed, outcome: rec.outcome, summary: Some(rec.summary), series }
        }
        Err(e) => TrialResult {
            platform,
            index,
            seed,
            outcome: TrialOutcome::Failed(e.to_string()),
            summary: None,
            series: Vec::new(),
        },
    }
}

/// Runs every configured cell over the shared seed list `seed + i`, up to
/// `jobs` trials at a time. Results do not depend on `jobs`.
pub fn run_batch(cfg: &ExperimentConfig, env: &Environment) -> Result<BatchReport> {
    cfg.validate()?;
    let platforms = cfg.platforms()?;
    let jobs: Vec<(Platform, usize)> =
        platforms.iter().flat_map(|&p| (0..cfg.trials).map(move |i| (p, i))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<TrialResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(platform, i)| {
                let seed = cfg.seed.wrapping_add(i as u64);
                let cell_cfg = ExperimentConfig { mode: platform.mode, merged: platform.merged, ..cfg.clone() };
                reduce(platform, i, seed, cfg, run_trial(&cell_cfg, env, seed))
            })
            .collect()
    });
    let cells = platforms.iter().map(|&p| summarize(p, &results)).collect();
    Ok(BatchReport { results, cells })
}

/// Writes `<cell>/trial_<i>.csv` for every trial, then `trials.csv` and
/// `summary.csv`.
pub fn write_batch(dir: &Path, report: &BatchReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in &report.results {
        let cell_dir = dir.join(r.platform.label());
        fs::create_dir_all(&cell_dir)?;
        let f = File::create(cell_dir.join(format!("trial_{:03}.csv", r.index)))?;
        write_series_csv(BufWriter::new(f), &r.series)?;
    }
    write_trials_csv(BufWriter::new(File::create(dir.join("trials.csv"))?), &report.results)?;
    write_summary_csv(BufWriter::new(File::create(dir.join("summary.csv"))?), &report.cells)?;
    Ok(())
}

/// Writes the artifacts of a single trial: the bucketed series, the final
/// and ground-truth maps, the pose graph and, when recorded, the filter trace.
pub fn write_trial(dir: &Path, record: &TrialRecord, duration: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let series = bucket_trial(record, duration)?;
    write_series_csv(BufWriter::new(File::create(dir.join("trial.csv"))?), &series)?;
    record.final_map.write_pgm(BufWriter::new(File::create(dir.join("map.pgm"))?))?;
    record.online_map.write_pgm(BufWriter::new(File::create(dir.join("map_online.pgm"))?))?;
    write_class_pgm(&record.geometry, &record.ground_truth, BufWriter::new(File::create(dir.join("ground_truth.pgm"))?))?;
    record.graph.write_g2o(BufWriter::new(File::create(dir.join("graph.g2o"))?))?;
    if !record.trace.is_empty() {
        write_estimate_trace(BufWriter::new(File::create(dir.join("trace.csv"))?), &record.trace)?;
    }
    Ok(())
}

/// Writes every recorded snapshot as `snapshot_<seconds>.pgm`.
pub fn write_snapshots(dir: &Path, record: &TrialRecord) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (t, classes) in &record.snapshots {
        let p = dir.join(format!("snapshot_{:06.1}.pgm", t));
        write_class_pgm(&record.geometry, classes, BufWriter::new(File::create(&p)?))?;
        out.push(p);
    }
    Ok(out)
}
