//! File formats, dataset export, batch inference and pipelines for the
//! lakebench FrozenLake planning benchmark. The algorithms live in
//! [`lakebench_core`], re-exported here as `core`.

pub use lakebench_core as core;

pub mod corpus;
pub mod dataset;
pub mod error;
pub mod files;
pub mod gateway;
pub mod image;
pub mod pipeline;
pub mod presets;
pub mod scoring;

pub use error::{Error, Result};
