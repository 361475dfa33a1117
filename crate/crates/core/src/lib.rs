//! Desk-scale numerical toolkit for twisted L-function experiments.
//!
//! The crate provides exact modular arithmetic and exponential sums,
//! Dirichlet characters with exact root-of-unity phases, cusp-form
//! coefficient sources (built-in weight-12 form plus an ingestion path for
//! externally computed spectral data), Bessel-type integral transforms,
//! circle-method covering sets, the dual-sum machinery that rewrites a
//! smoothed coefficient sum against its Poisson/Voronoi dual, and smoothed
//! evaluation of central L-values.
//!
//! Everything is designed for verification at small parameters: each
//! analytic identity has a finite, fully computable instance, and every
//! truncation made along the way is bounded numerically and reported
//! rather than silently dropped.

pub mod arith;
pub mod bessel;
pub mod calib;
pub mod characters;
pub mod circle;
pub mod forms;
pub mod gamma;
pub mod quad;
pub mod lfunc;
pub mod summation;

pub use num_complex::Complex64;
