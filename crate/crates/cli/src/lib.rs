//! Seeded, reproducible experiments over `qwalk-core` with JSON reports, and
//! the `qwalk` command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, Generator, TreeShape};
pub use experiments::run;
pub use report::{Aggregate, Check, ExperimentReport, Relation, TrialRecord, SCHEMA_VERSION};
