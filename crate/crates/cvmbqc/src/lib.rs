//! Command-line driver and experiment runners for the measurement-based
//! computation core.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod output;
