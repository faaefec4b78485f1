//! Feature encoding, collapse-resistant feature interaction, multi-task
//! disentanglement, training and exploration components for ads ranking
//! models, plus the analysis tools used to inspect what they learn.
//!
//! Everything is 64-bit, single-threaded by default and deterministic given
//! a seed.

pub mod analysis;
pub mod data;
pub mod encoding;
pub mod error;
pub mod exploration;
pub mod interactions;
pub mod model;
pub mod numerics;
pub mod tim;
pub mod training;

pub use error::{Error, Result};
pub use numerics::{Matrix, Spectrum};
