//! File formats, dataset materialization, experiment orchestration and the
//! command-line front end for the compression-aware training lab.
//!
//! The algorithms live in `cptlab-core`; this crate adds everything that
//! touches the filesystem or the process: PPM and annotation files, the
//! dataset manifest, checkpoint files, flat `key = value` configuration,
//! worker pools, and the sweep/ablation report writers.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod harness;
pub mod pool;
pub mod records;

pub use cptlab_core as core;
pub use error::{LabError, Result};
