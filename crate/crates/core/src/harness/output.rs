use std::io::Write;

use super::trial::{TrialOutcome, TrialRecord, TrialSummary};
use crate::error::Result;
use crate::metrics::{bucket_series, mean_std, BUCKET_WINDOW};
use crate::planner::Platform;

pub const TRIAL_CSV_HEADER: [&str; 7] = ["time", "entropy_norm", "path_len", "wheel_rot", "loops", "ate", "bac"];

/// One row of the bucketed per-trial series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub time: f64,
    pub entropy_norm: f64,
    pub path_len: f64,
    pub wheel_rot: f64,
    pub loops: f64,
    pub ate: f64,
    pub bac: f64,
}

/// Buckets the per-step series of a trial into 2 s windows over `duration`.
pub fn bucket_trial(record: &TrialRecord, duration: f64) -> Result<Vec<SeriesRow>> {
    let col = |f: &dyn Fn(&super::trial::StepSample) -> f64| -> Result<Vec<(f64, f64)>> {
        let s: Vec<(f64, f64)> = record.samples.iter().map(|s| (s.time, f(s))).collect();
        bucket_series(&s, BUCKET_WINDOW, Some(duration))
    };
    let e = col(&|s| s.entropy_norm)?;
    let p = col(&|s| s.path_length)?;
    let w = col(&|s| s.wheel_rotation)?;
    let l = col(&|s| s.loops as f64)?;
    let a = col(&|s| s.ate)?;
    let b = col(&|s| s.bac)?;
    Ok((0..e.len())
        .map(|i| SeriesRow {
            time: e[i].0,
            entropy_norm: e[i].1,
            path_len: p[i].1,
            wheel_rot: w[i].1,
            loops: l[i].1,
            ate: a[i].1,
            bac: b[i].1,
        })
        .collect())
}

pub fn write_series_csv<W: Write>(out: W, rows: &[SeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_CSV_HEADER)?;
    for r in rows {
        w.write_record(
            [r.time, r.entropy_norm, r.path_len, r.wheel_rot, r.loops, r.ate, r.bac].iter().map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Outcome and summary of one trial inside a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub platform: Platform,
    pub index: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub summary: Option<TrialSummary>,
    pub series: Vec<SeriesRow>,
}

pub const TRIALS_HEADER: [&str; 15] = [
    "cell",
    "trial",
    "seed",
    "outcome",
    "duration",
    "path_len",
    "wheel_rot_per_m",
    "loops",
    "loops_per_m",
    "ate",
    "ate_filter",
    "bac",
    "bac_online",
    "entropy_norm",
    "reason",
];

pub fn write_trials_csv<W: Write>(out: W, results: &[TrialResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_HEADER)?;
    for r in results {
        let reason = match &r.outcome {
            TrialOutcome::Failed(m) => m.clone(),
            _ => String::new(),
        };
        let mut row = vec![r.platform.label(), r.index.to_string(), r.seed.to_string(), r.outcome.label().to_string()];
        match &r.summary {
            Some(s) => row.extend([
                s.duration.to_string(),
                s.path_length.to_string(),
                opt(s.wheel_rotation_per_meter),
                s.loops.to_string(),
                opt(s.loops_per_meter),
                opt(s.ate),
                opt(s.ate_filter),
                s.bac.to_string(),
                s.bac_online.to_string(),
                s.entropy_norm.to_string(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 10)),
        }
        row.push(reason);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard deviation of the metrics over the successful trials of
/// one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub platform: Platform,
    pub trials: usize,
    pub successes: usize,
    pub wheel_rot_per_m: Option<(f64, f64)>,
    pub loops_per_m: Option<(f64, f64)>,
    pub ate: Option<(f64, f64)>,
    pub bac: Option<(f64, f64)>,
    pub entropy_norm: Option<(f64, f64)>,
    pub path_len: Option<(f64, f64)>,
}

impl CellSummary {
    pub fn complete(&self) -> bool {
        self.successes == self.trials
    }
}

pub fn summarize(platform: Platform, results: &[TrialResult]) -> CellSummary {
    let mine: Vec<&TrialResult> = results.iter().filter(|r| r.platform == platform).collect();
    let ok: Vec<&TrialSummary> =
        mine.iter().filter(|r| r.outcome.is_success()).filter_map(|r| r.summary.as_ref()).collect();
    let stat = |f: &dyn Fn(&TrialSummary) -> Option<f64>| mean_std(&ok.iter().filter_map(|s| f(s)).collect::<Vec<_>>());
    CellSummary {
        platform,
        trials: mine.len(),
        successes: ok.len(),
        wheel_rot_per_m: stat(&|s| s.wheel_rotation_per_meter),
        loops_per_m: stat(&|s| s.loops_per_meter),
        ate: stat(&|s| s.ate),
        bac: stat(&|s| Some(s.bac)),
        entropy_norm: stat(&|s| Some(s.entropy_norm)),
        path_len: stat(&|s| Some(s.path_length)),
    }
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "cell",
    "trials",
    "successes",
    "complete",
    "wheel_rot_per_m_mean",
    "wheel_rot_per_m_std",
    "loops_per_m_mean",
    "loops_per_m_std",
    "ate_mean",
    "ate_std",
    "bac_mean",
    "bac_std",
    "entropy_norm_mean",
    "entropy_norm_std",
    "path_len_mean",
    "path_len_std",
];

pub fn write_summary_csv<W: Write>(out: W, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for c in cells {
        let mut row = vec![c.platform.label(), c.trials.to_string(), c.successes.to_string(), c.complete().to_string()];
        for s in [c.wheel_rot_per_m, c.loops_per_m, c.ate, c.bac, c.entropy_norm, c.path_len] {
            row.push(opt(s.map(|v| v.0)));
            row.push(opt(s.map(|v| v.1)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
