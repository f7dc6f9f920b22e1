//! Experiment toolkit around `constel-core`: on-disk artifact formats, the
//! benchmarking/failure-injection/tradeoff harness, and the `constel` CLI.

pub mod files;
pub mod harness;

pub mod cli;
