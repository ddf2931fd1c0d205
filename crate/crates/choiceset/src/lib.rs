//! File formats, the `choiceset` command line and a parallel experiment
//! harness on top of `choiceset-core`.

pub mod cli;
pub mod experiment;
pub mod ingest;
pub mod parallel;
pub mod record;
pub mod schema;

pub use choiceset_core as core;
