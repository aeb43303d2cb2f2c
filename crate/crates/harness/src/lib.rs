//! Simulation harness for the slot-insertion experiments: seeded episode
//! runner, trial batches with per-cell metrics, guarantee checkers, and
//! reproducible log output.

pub mod config;
pub mod episode;
pub mod output;
pub mod smoothing;
pub mod theorems;
pub mod trials;
