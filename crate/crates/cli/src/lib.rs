//! Command-line front end: config parsing, pipelines, CSV and SVG output.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
