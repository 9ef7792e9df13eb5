//! Experiment harness for `abloc-core`: TOML configs, dataset CSV export,
//! single runs, sweeps and report files.

pub mod config;
pub mod dataset_io;
pub mod error;
pub mod output;
pub mod report;
pub mod sweep;

pub use config::{load_config, parse_config, render_config};
pub use error::{HarnessError, Result};
pub use output::{emit_outputs, emit_sweep, Format};
pub use report::{parse_report, run_experiment, RunReport};
pub use sweep::{sweep, SweepAxis, SweepReport};
