//! Configuration, persistence, the CLI, and the canned experiments.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod manifest;
pub mod series;
