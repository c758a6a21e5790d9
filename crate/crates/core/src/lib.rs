//! Numerical model of a Dirac field outside a collapsing star.

pub mod car;
pub mod classical;
pub mod geometry;
pub mod interacting;
pub mod numerics;
pub mod spectral;

pub use num_complex::Complex64 as C64;
