//! Process benchmark harness: parameterized benchmarks, repeat-run
//! statistics, sweeps, environment checks, an analysis journal (measure,
//! explain, test, improve) and reports.

pub mod cli;
pub mod envcheck;
pub mod fixtures;
pub mod journal;
pub mod model;
pub mod ndjson;
pub mod project;
pub mod report;
pub mod runner;
pub mod stats;
pub mod store;
pub mod sweep;
