//! Spectral final-data solver for Vlasov-type plasma models on the torus.
//!
//! The distribution is stored in the free-transport frame and in double
//! Fourier variables `(k, eta)`. Starting from a prescribed profile at large
//! times the solver reconstructs the electric field through a backward
//! Volterra equation, integrates the kinetic profile back to `t = 0` and
//! iterates this map to a fixed point.

pub mod dispersion;
pub mod error;
pub mod field;
pub mod fit;
pub mod gevrey;
pub mod grid;
pub mod kinetic;
pub mod model;
pub mod quad;
pub mod scattering;
pub mod volterra;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
