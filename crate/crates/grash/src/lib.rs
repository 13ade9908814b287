//! File formats, run artifacts and parallel execution around `grash-core`.
//!
//! - [`tsv`]: tab-separated triple files and dataset directories.
//! - [`ladder`]: the text cache of a k-core ladder.
//! - [`checkpoint`]: the binary model checkpoint.
//! - [`runlog`]: trial logs, manifests and progress reporting.
//! - [`exec`]: a rayon-backed trial executor.
//! - [`config`]: the TOML run configuration shared with the command line.

pub mod checkpoint;
pub mod config;
pub mod exec;
pub mod ladder;
pub mod runlog;
pub mod tsv;

mod error;

pub use error::{Error, Result};
