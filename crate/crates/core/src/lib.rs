//! Exact combinatorics, brute-force oracles and a reproducible Monte Carlo
//! engine for trace and entry statistics of Wigner and Wishart matrices.
//!
//! Float-side numerics are generic over [`Real`] (`f32`/`f64`); exact
//! quantities are [`Integer`]/[`Rational`]. The aliases below fix the
//! concrete types used by the engine and the CLI.

pub mod cycles;
pub mod error;
pub mod exactnum;
pub mod matgen;
pub mod mcengine;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod variance;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{ExactField, Real};

/// Arbitrary-precision integer.
pub type Integer = num_bigint::BigInt;
/// Arbitrary-precision rational, always reduced with a positive denominator.
pub type Rational = num_rational::BigRational;
/// Dense real matrix used by the samplers and the eigensolver.
pub type Matrix = ndarray::Array2<f64>;
/// Eigendecomposition in double precision.
pub type Eigen = spectral::EigenDecomposition<f64>;
/// Marchenko–Pastur parameters in double precision.
pub type MpParams = spectral::MpParams<f64>;
/// Streaming moment accumulator in double precision.
pub type Accumulator = stats::MomentAccumulator<f64>;
