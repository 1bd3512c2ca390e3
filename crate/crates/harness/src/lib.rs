//! Batch harness around `gazepriv-core`: dataset ingestion, declarative
//! pipeline configuration, parallel execution, and privacy-utility
//! reporting.

pub mod config;
pub mod ingest;
pub mod ops;
pub mod pipeline;
pub mod report;
pub mod synth;

mod cli;

pub use cli::cli_main;
