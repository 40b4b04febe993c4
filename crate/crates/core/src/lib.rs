//! Spectral tools for perturbed Lamé operators `-Δ* + V` on periodic grids:
//! Helmholtz projections, the Lamé symbol and resolvent, weighted potential
//! norms, eigenvalue enclosure bounds and dense spectral verification.

pub mod cli;
pub mod enclosure;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod helmholtz;
pub mod io;
pub mod lame;
pub mod linalg;
pub mod norms;
pub mod potential;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use field::{MatrixPotentialField, ScalarField, VectorField};
pub use grid::Grid;
pub use num_complex::Complex64;
pub use lame::LameParams;
