//! Command-line front end: configuration files, run directories and CSV
//! reports around the `disentangle` library.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

pub use commands::run;
