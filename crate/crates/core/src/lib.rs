//! Simulation and verification toolkit for surface-code state injection
//! ("uploading") and the noisy learning tasks that motivate it.
//!
//! The crate is organised bottom-up: Pauli algebra and dense operators, the
//! replica operators behind third-moment estimation, shallow-shadow weights,
//! surface-code geometry and the spacetime matching decoder, the Monte Carlo
//! injection harness, and the density-matrix-exponentiation imaging pipeline.

pub mod css_sim;
pub mod decoder;
pub mod dense;
pub mod error;
pub mod f2;
pub mod harness;
pub mod imaging;
pub mod moments;
pub mod pauli;
pub mod replica;
pub mod shadows;
pub mod stats;
pub mod surface_code;

pub use dense::DenseOperator;
pub use error::{Error, Result};
pub use pauli::{NoiseParams, PauliString};
pub use stats::EstimatorReport;
