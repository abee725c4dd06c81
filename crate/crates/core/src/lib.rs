//! Bergman kernels of the unbounded worm domain, its unwound model and the
//! weighted half-plane kernels they are built from.

pub mod acceptance;
pub mod error;
pub mod geometry;
pub mod halfplane;
pub mod quadrature;
pub mod specfun;
pub mod verification;
pub mod weights;
pub mod worm_kernel;

pub use error::{Result, WormError};
