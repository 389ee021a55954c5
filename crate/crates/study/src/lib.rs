//! Predefined response-time, availability and scalability studies over the
//! RAFT cluster models, with CSV and JSON output.

mod studies;
mod table;

pub use studies::{
    config_from_metadata, hourly_grid_ms, millisecond_grid, run_study, StudyError, StudyId,
    StudySpec, CONFIG_PREFIX, DEFAULT_EPS, DEFAULT_RUNS, DEFAULT_SEED,
};
pub use table::{format_significant, Format, ResultTable, TableError, SIGNIFICANT_DIGITS};
