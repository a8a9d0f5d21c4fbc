//! Numerical laboratory for the two-dimensional MHD system with zero velocity
//! dissipation and magnetic diffusion given by the Fourier multiplier
//! `|ξ|² g(|ξ|)`.
//!
//! * [`symbols`]: dissipation symbol families and the Mikhlin check.
//! * [`admissibility`]: the horizon threshold `A_T` and growth integral `C_T`.
//! * [`kernel`]: moment integrals of the semigroup kernel and their scaling.
//! * [`spectral`]: periodic Fourier grid, transforms, projection and norms.
//! * [`solver`]: integrating-factor RK4 time stepping.
//! * [`diagnostics`]: energy ledger, identities and monitored norms.
//! * [`verify`]: the property suite run by `gmhd verify`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod symbols;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use symbols::SymbolSpec;
