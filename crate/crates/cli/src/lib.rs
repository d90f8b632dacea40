//! Experiment runner: parses a TOML config, builds the problem and its
//! reference solution, runs the chosen solver across seeds, and emits one CSV
//! trace per seed plus a JSON summary.

pub mod config;
pub mod runner;
pub mod trace;
