//! Configuration, the run loop, and restartable output.

mod checkpoint;
mod config;
mod run;

pub use checkpoint::{
    grid_digest, meta_path, params_digest, read_checkpoint, write_checkpoint, CheckpointHeader, CHECKPOINT_VERSION,
};
pub use config::{parse_config, ConfigError, InitialCondition, RunConfig};
pub use run::{initial_state, run, RunError, RunSummary, CHECKPOINT_FILE, DIAGNOSTICS_FILE, FIELDS_DIR};
