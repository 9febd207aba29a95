//! Experiment configuration, environment loading, the closed-loop trial and
//! batch runs over the platform comparison matrix.

mod batch;
mod config;
mod output;
mod trial;

pub use batch::{run_batch, write_batch, write_snapshots, write_trial, BatchReport};
pub use config::{load_environment, ExperimentConfig, MapConfig, SensorConfig, SimConfig, SlamConfig};
pub use output::{
    bucket_trial, summarize, write_series_csv, write_summary_csv, write_trials_csv, CellSummary, SeriesRow,
    TrialResult, SUMMARY_HEADER, TRIALS_HEADER, TRIAL_CSV_HEADER,
};
pub use trial::{run_trial, LoopEvent, StepSample, TrialOutcome, TrialRecord, TrialSummary};
