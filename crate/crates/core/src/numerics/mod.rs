//! Generic numerical building blocks: quadrature, bracketing root finding,
//! accelerated lattice sums and least squares.

pub mod quadrature;
pub mod roots;
pub mod series;
pub mod stats;

pub use quadrature::{Estimate, Quadrature};
