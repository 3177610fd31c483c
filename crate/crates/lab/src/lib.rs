//! File formats, parallel drivers and the `rrex` command line on top of
//! `rrex_core`.

pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod io;
pub mod parallel;
pub mod report;

pub use error::{LabError, Result};
