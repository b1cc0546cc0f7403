//! Numerical spectral geometry of convex co-compact hyperbolic surfaces:
//! length spectra, Selberg zeta functions, determinants, resonances,
//! relative heat invariants and finite-part integrals.

pub mod bounds;
pub mod conformal;
pub mod error;
pub mod precision;
pub mod special;
pub mod spectrum;
pub mod surface;
pub mod words;
pub mod zeta;

pub use error::{Result, ZsError};
pub use num_complex::Complex64;
