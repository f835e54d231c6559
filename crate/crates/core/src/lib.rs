//! Generalized wavelet filters on the circle.
//!
//! A filter here is a `c × c` matrix of step functions on an `N`-adic grid of
//! the circle, relative to a finite multiplicity function given by nested
//! sets `σ₁ ⊇ … ⊇ σ_c`. The crate verifies the filter equations, realizes the
//! Ruelle operator `S_H f(ω) = H(ω)ᵗ f(N·ω)` and its transfer adjoint on step
//! spaces, decides purity of `S_H` through exact eigen-analysis of the
//! transfer matrix, and searches for low-pass block certificates that prove
//! purity on the continuous circle.
//!
//! Modules, bottom up:
//!
//! * [`torus`]: exact rationals, circle points, grids, interval sets.
//! * [`filter`]: step functions, filter matrices, generators, residuals.
//! * [`lowpass`]: block certificates and the Journé parameter derivation.
//! * [`ruelle`]: the operator pair, transfer matrix and purity classification.
//! * [`gmra`]: resolution towers and the intersection report.

pub mod error;
pub mod filter;
pub mod gmra;
pub mod lowpass;
pub mod ruelle;
pub mod torus;

mod linalg;

pub use error::{Error, Result};
pub use num_complex::Complex64;
