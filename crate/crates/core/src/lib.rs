//! Baker domains, Baker laminations and pinching deformations of entire
//! transcendental functions, at desk scale.

pub mod dynamics;
pub mod error;
pub mod lamination;
pub mod lang;
pub mod moduli;
pub mod pinch;
pub mod plane;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
