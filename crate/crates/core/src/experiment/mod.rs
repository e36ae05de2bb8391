//! Monte-Carlo protocol: datasets across SNRs, training-size sweeps,
//! oracle cross-checks and raw IQ export.

mod config;
mod dataset;
mod iq;
mod oracle_check;
mod realization;
mod sweep;

pub use config::{ConfigOverrides, ExperimentConfig, Preset};
pub use dataset::{child_seed, generate_dataset, generate_dataset_at, split_train_test, training_seed};
pub use iq::{export_iq, read_iq, read_sidecar, write_iq, IQ_HEADER_LEN, IQ_MAGIC, IQ_VERSION};
pub use oracle_check::{oracle_check, OracleCheckOptions, OracleReport, OracleRow};
pub use realization::{realize, RealizationParams, RealizationSpec};
pub use sweep::{run_sweep, run_sweep_with_workers, SweepResult, SweepRow, SWEEP_CSV_HEADER};
