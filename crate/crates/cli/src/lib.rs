//! Experiment harness: line-oriented configs in, deterministic CSV out.

pub mod config;
pub mod suites;
