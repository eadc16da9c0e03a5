//! Persistence, configuration and the batch pipeline.

pub mod cache;
pub mod config;
pub mod csv;
pub mod pipeline;

pub use cache::{Cache, CACHE_DIR_ENV};
pub use config::{Mode, RunConfig, SigmaGrid};
pub use pipeline::{exit_code, job_seed, run, RunReport};
