//! Representation learning by density-ratio estimation.

pub mod analysis;
pub mod data;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod nn;
pub mod objectives;
pub mod quadrature;
pub mod ratio;
pub mod synth;
pub mod tensor;
pub mod train;

pub use data::PairedBatch;
pub use error::{Error, Result};
pub use tensor::Tensor;
