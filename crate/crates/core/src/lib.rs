//! Correlation-space simulation of measurement-based quantum wires built from
//! matrix-product states with a two-dimensional correlation space.

pub mod correlation;
pub mod download;
pub mod error;
pub mod io;
pub mod mps;
pub mod oracle;
pub mod pauli;
pub mod random;
pub mod real3;
pub mod sim;
pub mod transfer;

pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;
