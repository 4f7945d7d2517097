//! Configuration, orchestration and output for the `diolab` binary.

pub mod args;
pub mod experiment;
pub mod output;
pub mod suite;

pub use experiment::{run, ExperimentConfig, Outcome, RunManifest, Status, Task};
pub use suite::{check_suite, SuiteReport};
