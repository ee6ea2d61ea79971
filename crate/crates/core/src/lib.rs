//! Spectral Galerkin simulator and numerical-verification laboratory for the
//! fractionally damped semilinear wave equation
//!
//! ```text
//! u_tt + gamma (-Laplace)^theta u_t - Laplace u + f(u) = g
//! ```
//!
//! on a periodic box or a Dirichlet box, together with the energy and
//! Lyapunov identities, fractional-Laplacian representations, per-mode linear
//! spectra, and long-time experiments built on top of it.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fractional;
pub mod integrator;
pub mod linear;
pub mod nonlinearity;
pub mod spectral;

pub use error::{Error, Result};
