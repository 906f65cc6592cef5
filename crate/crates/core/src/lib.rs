//! Exact Gaussian moment engine and a desk-scale verifier for the
//! three-dimensional Gaussian product inequality
//!
//! `E[X_1^{p_1} X_2^{p_2} X_3^{p_3}] >= E[X_1^{p_1}] E[X_2^{p_2}] E[X_3^{p_3}]`
//!
//! for centered Gaussian vectors and even exponents, with equality exactly for
//! independent components.
//!
//! The moment engines in [`moments`] are generic over [`Scalar`], so the same
//! recursion evaluates moments over `f64`, exact rationals, or builds the
//! moment map symbolically over [`MomentPolynomial`].

pub mod cli;
pub mod elliptope;
pub mod error;
pub mod moments;
pub mod polynomial;
pub mod sampling;
pub mod scalar;
pub mod verifier;

pub use error::{GpiError, Result};
pub use moments::{moment, wick_bruteforce, CovarianceMatrix, ExponentVector};
pub use polynomial::MomentPolynomial;
pub use scalar::Scalar;

/// Arbitrary-precision rational scalar.
pub type Rational = num_rational::BigRational;

pub type RationalCovariance = CovarianceMatrix<Rational>;
pub type FloatCovariance = CovarianceMatrix<f64>;
pub type SymbolicCovariance = CovarianceMatrix<MomentPolynomial>;

pub type RationalPoint = elliptope::CorrelationPoint<Rational>;
pub type FloatPoint = elliptope::CorrelationPoint<f64>;
