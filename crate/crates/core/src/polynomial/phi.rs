use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{MomentPolynomial, UnivariatePolynomial, Var};
use crate::error::{GpiError, Result};
use crate::moments::{moment, CovarianceMatrix, ExponentVector, MomentEngine};

/// Degree cap `p_1 + p_2 + p_3` for symbolic construction.
pub const MAX_PHI_DEGREE: u32 = 40;

/// Unit-diagonal 3x3 covariance with symbolic off-diagonals `s_12 = a`,
/// `s_13 = b`, `s_23 = c`.
pub fn symbolic_correlation() -> CovarianceMatrix<MomentPolynomial> {
    CovarianceMatrix::from_correlations(
        3,
        &[MomentPolynomial::var(Var::A), MomentPolynomial::var(Var::B), MomentPolynomial::var(Var::C)],
    )
    .expect("three correlations for a 3x3 matrix")
}

/// `E[X_1^{p_1} X_2^{p_2} X_3^{p_3}]` as an exact polynomial in `(a, b, c)`.
pub fn phi_polynomial(p: &ExponentVector) -> Result<MomentPolynomial> {
    if p.len() != 3 {
        return Err(GpiError::DimensionMismatch { expected: 3, found: p.len() });
    }
    let degree = p.total_degree();
    if degree > MAX_PHI_DEGREE {
        return Err(GpiError::DegreeTooLarge { degree, max: MAX_PHI_DEGREE });
    }
    moment(&symbolic_correlation(), p)
}

/// Moment polynomial for a possibly negative multi-index; any negative
/// component gives the zero polynomial.
pub fn moment_polynomial(k: [i64; 3]) -> Result<MomentPolynomial> {
    if k.iter().any(|&x| x < 0) {
        return Ok(MomentPolynomial::zero());
    }
    phi_polynomial(&ExponentVector::from(k.map(|x| x as u32)))
}

/// `E[X_1^{p_1} X_2^{p_2}]` for a unit-variance pair with correlation `t`.
pub fn two_d_phi(p1: u32, p2: u32) -> Result<UnivariatePolynomial> {
    let degree = p1 + p2;
    if degree > MAX_PHI_DEGREE {
        return Err(GpiError::DegreeTooLarge { degree, max: MAX_PHI_DEGREE });
    }
    let cov = CovarianceMatrix::from_correlations(2, &[MomentPolynomial::var(Var::A)])?;
    let poly = MomentEngine::new(&cov).moment(&[p1, p2]);
    let mut coeffs = vec![BigRational::zero(); poly.total_degree() as usize + 1];
    for (m, c) in poly.terms() {
        coeffs[m.0[0] as usize] = c.clone();
    }
    Ok(UnivariatePolynomial::new(coeffs))
}

pub(crate) fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn one() -> BigRational {
    BigRational::one()
}
