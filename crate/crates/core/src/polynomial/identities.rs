//! Exact polynomial identity checks behind the moment-map argument. Every
//! check returns its residual polynomial so a failure can be inspected.

use num_traits::Zero;
use serde::Serialize;

use super::phi::{int, moment_polynomial, one};
use super::{phi_polynomial, two_d_phi, MomentPolynomial, UnivariatePolynomial, Var};
use crate::error::{GpiError, Result};
use crate::moments::ExponentVector;

/// One identity `lhs == rhs` with its residual `lhs - rhs` in canonical text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub passed: bool,
    pub residual: String,
}

impl IdentityCheck {
    fn from_poly(name: impl Into<String>, residual: MomentPolynomial) -> Self {
        Self { name: name.into(), passed: residual.is_zero(), residual: residual.to_string() }
    }

    fn from_univariate(name: impl Into<String>, residual: UnivariatePolynomial) -> Self {
        Self { name: name.into(), passed: residual.is_zero(), residual: residual.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentitySuite {
    pub suite: String,
    pub exponents: String,
    pub passed: bool,
    pub checks: Vec<IdentityCheck>,
}

impl IdentitySuite {
    fn new(suite: &str, p: [u32; 3], checks: Vec<IdentityCheck>) -> Self {
        Self {
            suite: suite.into(),
            exponents: format!("{},{},{}", p[0], p[1], p[2]),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

fn triple(p: &ExponentVector) -> Result<[u32; 3]> {
    match p.as_slice() {
        &[p1, p2, p3] => Ok([p1, p2, p3]),
        other => Err(GpiError::DimensionMismatch { expected: 3, found: other.len() }),
    }
}

/// Pairs `(variable, i, j)`: variable `a` is `s_12`, `b` is `s_13`, `c` is `s_23`.
const PAIRS: [(Var, usize, usize); 3] = [(Var::A, 0, 1), (Var::B, 0, 2), (Var::C, 1, 2)];

/// `d Phi_p / d s_ij == p_i p_j M(p - e_i - e_j)` for the three
/// off-diagonal entries.
pub fn check_derivative_identity(p: &ExponentVector) -> Result<IdentitySuite> {
    let t = triple(p)?;
    let phi = phi_polynomial(p)?;
    let mut checks = Vec::with_capacity(3);
    for (v, i, j) in PAIRS {
        let mut reduced = t.map(i64::from);
        reduced[i] -= 1;
        reduced[j] -= 1;
        let rhs = moment_polynomial(reduced)?.scale(&int(i64::from(t[i]) * i64::from(t[j])));
        let residual = phi.differentiate(v) - rhs;
        checks.push(IdentityCheck::from_poly(format!("d{}", v.name()), residual));
    }
    Ok(IdentitySuite::new("derivative", t, checks))
}

/// `p_i Phi_p == p_i (p_i - 1) Phi_{p - 2e_i} + sum_{v touching i} v dPhi/dv`
/// for each index with `p_i >= 2`.
pub fn check_stein_reduction(p: &ExponentVector) -> Result<IdentitySuite> {
    let t = triple(p)?;
    if t.iter().all(|&x| x < 2) {
        return Err(GpiError::InvalidExponents("stein reduction needs some exponent >= 2".into()));
    }
    let phi = phi_polynomial(p)?;
    let mut checks = Vec::new();
    for i in 0..3 {
        if t[i] < 2 {
            continue;
        }
        let pi = i64::from(t[i]);
        let mut reduced = t.map(i64::from);
        reduced[i] -= 2;
        let mut rhs = moment_polynomial(reduced)?.scale(&int(pi * (pi - 1)));
        for (v, a, b) in PAIRS {
            if a == i || b == i {
                rhs = rhs + &MomentPolynomial::var(v) * &phi.differentiate(v);
            }
        }
        let residual = phi.scale(&int(pi)) - rhs;
        checks.push(IdentityCheck::from_poly(format!("reduce_p{}", i + 1), residual));
    }
    Ok(IdentitySuite::new("stein_reduction", t, checks))
}

/// On each of the six edges of the elliptope two coordinates coincide up to
/// sign, so `Phi_p` restricted there is a two-dimensional moment polynomial.
pub fn check_edge_reduction(p: &ExponentVector) -> Result<IdentitySuite> {
    let t = triple(p)?;
    let phi = phi_polynomial(p)?;
    let tt = UnivariatePolynomial::t();
    let neg_t = tt.scale(&-one());
    let plus = UnivariatePolynomial::one();
    let minus = UnivariatePolynomial::constant(-one());
    let sign = |negative: bool, power: u32| if negative && power % 2 == 1 { -one() } else { one() };

    // (name, substitution for (a, b, c), merged exponents, sign)
    let edges: [(&str, [&UnivariatePolynomial; 3], (u32, u32), _); 6] = [
        ("c=1", [&tt, &tt, &plus], (t[0], t[1] + t[2]), sign(false, 0)),
        ("c=-1", [&tt, &neg_t, &minus], (t[0], t[1] + t[2]), sign(true, t[2])),
        ("b=1", [&tt, &plus, &tt], (t[0] + t[2], t[1]), sign(false, 0)),
        ("b=-1", [&tt, &minus, &neg_t], (t[0] + t[2], t[1]), sign(true, t[2])),
        ("a=1", [&plus, &tt, &tt], (t[0] + t[1], t[2]), sign(false, 0)),
        ("a=-1", [&minus, &tt, &neg_t], (t[0] + t[1], t[2]), sign(true, t[1])),
    ];
    let mut checks = Vec::with_capacity(6);
    for (name, subs, (q1, q2), s) in edges {
        let restricted = phi.compose(subs);
        let expected = two_d_phi(q1, q2)?.scale(&s);
        let residual = &restricted + &expected.scale(&-one());
        checks.push(IdentityCheck::from_univariate(name, residual));
    }
    Ok(IdentitySuite::new("edge_reduction", t, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(p: [u32; 3]) -> ExponentVector {
        ExponentVector::from(p)
    }

    #[test]
    fn derivative_identity_small_cases() {
        for p in [[2, 2, 0], [2, 2, 2], [0, 2, 2], [4, 2, 2], [3, 1, 2]] {
            let suite = check_derivative_identity(&ev(p)).unwrap();
            assert!(suite.passed, "{suite:?}");
        }
    }

    #[test]
    fn derivative_of_222_is_4a_plus_8bc() {
        let phi = phi_polynomial(&ev([2, 2, 2])).unwrap();
        assert_eq!(phi.differentiate(Var::A).to_string(), "4*a + 8*b*c");
        assert_eq!(moment_polynomial([1, 1, 2]).unwrap().to_string(), "a + 2*b*c");
    }

    #[test]
    fn stein_reduction_small_cases() {
        for p in [[2, 2, 0], [2, 2, 2], [4, 0, 0], [6, 4, 2], [5, 3, 2]] {
            let suite = check_stein_reduction(&ev(p)).unwrap();
            assert!(suite.passed, "{suite:?}");
        }
        assert!(check_stein_reduction(&ev([1, 1, 0])).is_err());
    }

    #[test]
    fn edge_reduction_small_cases() {
        for p in [[2, 2, 2], [4, 2, 2], [2, 4, 6]] {
            let suite = check_edge_reduction(&ev(p)).unwrap();
            assert!(suite.passed, "{suite:?}");
            assert_eq!(suite.checks.len(), 6);
        }
        // odd exponents pick up the sign on the negative edges
        assert!(check_edge_reduction(&ev([1, 2, 3])).unwrap().passed);
        let phi = phi_polynomial(&ev([2, 2, 2])).unwrap();
        let on_edge =
            phi.compose([&UnivariatePolynomial::t(), &UnivariatePolynomial::t(), &UnivariatePolynomial::one()]);
        assert_eq!(on_edge.to_string(), "3 + 12*t^2");
    }

    #[test]
    fn residual_reported_on_failure() {
        let wrong = IdentityCheck::from_poly("x", MomentPolynomial::var(Var::A));
        assert!(!wrong.passed);
        assert_eq!(wrong.residual, "a");
    }
}
