//! Experiment harness: the isometry classifier, flat configs, and suites
//! that emit line-delimited JSON reports.

pub mod classify;
pub mod config;
pub mod examples;
pub mod suite;

pub use classify::{classify_isometry, Branch, ClassificationVerdict, IsometryStatus};
pub use config::ExperimentConfig;
pub use suite::{run_suite, CaseRecord, SuiteReport};
