//! Pseudo-spectral solver for the periodic Muskat contour equation with
//! complexified-contour analyticity diagnostics.
//!
//! * [`spectral`]: periodic fields on the grid and their Fourier multipliers.
//! * [`kernels`]: the contour kernel and the quantities built from it.
//! * [`localization`]: cutoffs λ and c and the splitting f = f^c + f̃.
//! * [`evolution`]: right-hand sides and the γ-family runner.
//! * [`diagnostics`]: certification quantities of a family state.
//! * [`stationary`]: analyticity of stationary solutions by complex-time continuation.
//! * [`config`] and [`run`]: configuration and orchestration.
//! * [`verify`]: self-checks.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod kernels;
pub mod localization;
pub mod run;
pub mod spectral;
pub mod stationary;
pub mod verify;

pub use error::{MuskatError, Result};
