//! Benchmark harness for distpred: model specifications, CSV ingestion and
//! cross-validated experiments.

pub mod config;
mod error;
pub mod experiment;
pub mod grammar;
pub mod ingest;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, ExperimentOutput};
pub use grammar::{parse_model_spec, ModelSpec, PointSpec};
pub use ingest::load_csv;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
