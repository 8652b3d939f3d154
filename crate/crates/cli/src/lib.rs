//! IO layer and pipeline orchestration: trajectory CSV ingestion, scenario
//! and atlas JSON, raster export, and the command implementations behind
//! the `fieldatlas` binary.

pub mod commands;
pub mod config;
pub mod formats;
pub mod ingest;
