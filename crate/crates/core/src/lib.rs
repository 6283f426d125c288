//! Numerical toolkit for dilute Bose gases with three-body interactions.
//!
//! * [`potentials`]: radial and three-body potentials, the metric `M`.
//! * [`scattering`]: zero-energy scattering energies `b(v)` and `b_M(V)`.
//! * [`gp`]: Gross-Pitaevskii minimization on three-dimensional grids.
//! * [`bogoliubov`]: Hessian at a minimizer and the excitation spectrum.
//! * [`dilute`]: dilute-limit energy formulas.

pub mod bogoliubov;
pub mod cg;
pub mod dilute;
pub mod error;
pub mod gp;
pub mod numerics;
pub mod potentials;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
