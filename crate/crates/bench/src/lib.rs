//! Experiment harness: configs, runs, CSV traces and plot data.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use error::{BenchError, Result};
