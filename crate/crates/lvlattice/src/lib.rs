//! Monodromy matrices, spectral curves, separation of variables, and
//! integrability certificates for periodic extended Lotka-Volterra lattices.

pub mod bracket;
pub mod error;
pub mod flow;
pub mod gauge;
pub mod linalg;
pub mod lv;
pub mod monodromy;
pub mod newton;
pub mod poly;
pub mod report;
pub mod rmatrix;
pub mod roots;
pub mod scalar;
pub mod sov;
pub mod sympoly;

pub use error::{Error, Result};
pub use scalar::{GaussRat, Mode, Scalar};
