//! Configuration, orchestration and file output for the `epifv` binary.

pub mod commands;
pub mod config;
pub mod output;
