//! Compression-aware training lab, algorithmic core.
//!
//! Everything in this crate is pure computation over in-memory buffers so it
//! builds without `std` (an allocator is required). File formats, the CLI and
//! experiment orchestration live in the `cptlab` companion crate.
//!
//! * [`jpeg`]: baseline sequential JPEG encoder/decoder with every pipeline
//!   stage exposed on its own.
//! * [`scene`]: deterministic synthetic crowd scenes and Gaussian density maps.
//! * [`net`]: a small convolutional density regressor with exact gradients,
//!   an AdamW optimizer and a binary checkpoint format.
//! * [`corpus`]: compressed-then-decoded training samples, one set per quality.
//! * [`curriculum`]: curriculum pre-training and its baselines.
//! * [`metrics`]: count errors, aggregates and trade-off series.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod curriculum;
pub mod jpeg;
pub mod metrics;
pub mod net;
pub mod scene;

pub use jpeg::{PlanarImage, QualityFactor};
