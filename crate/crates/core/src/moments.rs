//! Mixed moments `E[X_1^{k_1} ... X_n^{k_n}]` of centered Gaussian vectors.
//!
//! Two independent engines are provided. [`wick_bruteforce`] sums covariance
//! products over every perfect matching of the index multiset and serves as an
//! oracle. [`moment`] runs the memoized Gaussian integration-by-parts
//! recursion and is the one used everywhere else.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{GpiError, Result};
use crate::scalar::Scalar;

/// Largest total degree accepted by the matching enumeration.
pub const MAX_BRUTEFORCE_DEGREE: u32 = 16;

/// Moment multi-index `(k_1, ..., k_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exps: Vec<u32>) -> Result<Self> {
        if exps.is_empty() {
            return Err(GpiError::InvalidExponents("at least one exponent is required".into()));
        }
        Ok(Self(exps))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn all_even(&self) -> bool {
        self.0.iter().all(|k| k % 2 == 0)
    }
}

impl From<[u32; 3]> for ExponentVector {
    fn from(p: [u32; 3]) -> Self {
        Self(p.to_vec())
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ExponentVector {
    type Err = GpiError;

    fn from_str(s: &str) -> Result<Self> {
        let exps = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|_| GpiError::InvalidExponents(format!("`{}` is not a nonnegative integer", part.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(exps)
    }
}

/// Symmetric `n x n` covariance matrix over a scalar ring.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<S> {
    size: usize,
    entries: Vec<S>,
}

impl<S: Scalar> CovarianceMatrix<S> {
    /// Builds a matrix from row-major entries, rejecting asymmetric input.
    pub fn new(size: usize, entries: Vec<S>) -> Result<Self> {
        if size == 0 || entries.len() != size * size {
            return Err(GpiError::DimensionMismatch { expected: size * size, found: entries.len() });
        }
        for i in 0..size {
            for j in i + 1..size {
                if !entries[i * size + j].ring_eq(&entries[j * size + i]) {
                    return Err(GpiError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { size, entries })
    }

    /// Unit-diagonal matrix from the strict upper triangle in row-major order:
    /// `(1,2), (1,3), ..., (1,n), (2,3), ...`.
    pub fn from_correlations(size: usize, upper: &[S]) -> Result<Self> {
        let expected = size * size.saturating_sub(1) / 2;
        if size == 0 || upper.len() != expected {
            return Err(GpiError::DimensionMismatch { expected, found: upper.len() });
        }
        let mut entries = vec![S::zero(); size * size];
        let mut next = upper.iter();
        for i in 0..size {
            entries[i * size + i] = S::one();
            for j in i + 1..size {
                let v = next.next().expect("length checked").clone();
                entries[i * size + j] = v.clone();
                entries[j * size + i] = v;
            }
        }
        Ok(Self { size, entries })
    }

    pub fn identity(size: usize) -> Self {
        Self::from_correlations(size, &vec![S::zero(); size * size.saturating_sub(1) / 2])
            .expect("identity is well formed")
    }

    pub fn diagonal(diag: &[S]) -> Self {
        let size = diag.len();
        let mut entries = vec![S::zero(); size * size];
        for (i, d) in diag.iter().enumerate() {
            entries[i * size + i] = d.clone();
        }
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn scaled(&self, factor: &S) -> Self {
        Self { size: self.size, entries: self.entries.iter().map(|e| e.clone() * factor.clone()).collect() }
    }

    /// Simultaneous row/column permutation: entry `(i, j)` of the result is
    /// entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.size;
        let mut entries = Vec::with_capacity(n * n);
        for &pi in perm {
            for &pj in perm {
                entries.push(self.get(pi, pj).clone());
            }
        }
        Self { size: n, entries }
    }

    /// Converts every entry through `f`.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> CovarianceMatrix<T> {
        CovarianceMatrix { size: self.size, entries: self.entries.iter().map(f).collect() }
    }
}

fn check_dims<S>(cov: &CovarianceMatrix<S>, k: &ExponentVector) -> Result<()> {
    if cov.size != k.len() {
        return Err(GpiError::DimensionMismatch { expected: cov.size, found: k.len() });
    }
    Ok(())
}

/// Isserlis/Wick sum over all perfect matchings of the multiset that repeats
/// index `i` exactly `k_i` times.
pub fn wick_bruteforce<S: Scalar>(cov: &CovarianceMatrix<S>, k: &ExponentVector) -> Result<S> {
    check_dims(cov, k)?;
    let degree = k.total_degree();
    if degree > MAX_BRUTEFORCE_DEGREE {
        return Err(GpiError::DegreeTooLarge { degree, max: MAX_BRUTEFORCE_DEGREE });
    }
    if degree % 2 == 1 {
        return Ok(S::zero());
    }
    let labels: Vec<usize> =
        k.as_slice().iter().enumerate().flat_map(|(i, &ki)| std::iter::repeat_n(i, ki as usize)).collect();
    let full = if labels.is_empty() { 0u32 } else { u32::MAX >> (32 - labels.len()) };
    let mut total = S::zero();
    enumerate_matchings(cov, &labels, full, S::one(), &mut total);
    Ok(total)
}

fn enumerate_matchings<S: Scalar>(
    cov: &CovarianceMatrix<S>,
    labels: &[usize],
    remaining: u32,
    partial: S,
    total: &mut S,
) {
    if remaining == 0 {
        *total = std::mem::replace(total, S::zero()) + partial;
        return;
    }
    let first = remaining.trailing_zeros() as usize;
    let rest = remaining & !(1 << first);
    let mut others = rest;
    while others != 0 {
        let second = others.trailing_zeros() as usize;
        others &= others - 1;
        let weight = cov.get(labels[first], labels[second]);
        if weight.is_zero() {
            continue;
        }
        enumerate_matchings(cov, labels, rest & !(1 << second), partial.clone() * weight.clone(), total);
    }
}

/// Memoized Gaussian integration-by-parts recursion.
///
/// With `i` the first index such that `k_i > 0`,
/// `M(k) = (k_i - 1) s_ii M(k - 2e_i) + sum_{j != i} k_j s_ij M(k - e_i - e_j)`
/// and `M(0) = 1`.
pub fn moment<S: Scalar>(cov: &CovarianceMatrix<S>, k: &ExponentVector) -> Result<S> {
    check_dims(cov, k)?;
    let mut engine = MomentEngine::new(cov);
    Ok(engine.moment(k.as_slice()))
}

/// Moment recursion bound to one covariance; the memo table lives as long as
/// the engine.
pub struct MomentEngine<'a, S> {
    cov: &'a CovarianceMatrix<S>,
    memo: HashMap<Vec<u32>, S>,
}

impl<'a, S: Scalar> MomentEngine<'a, S> {
    pub fn new(cov: &'a CovarianceMatrix<S>) -> Self {
        Self { cov, memo: HashMap::new() }
    }

    /// Panics if `k.len()` differs from the covariance size.
    pub fn moment(&mut self, k: &[u32]) -> S {
        assert_eq!(k.len(), self.cov.size, "exponent length must match covariance size");
        if k.iter().sum::<u32>() % 2 == 1 {
            return S::zero();
        }
        let Some(pivot) = k.iter().position(|&ki| ki > 0) else {
            return S::one();
        };
        if let Some(hit) = self.memo.get(k) {
            return hit.clone();
        }
        let mut acc = S::zero();
        let mut reduced = k.to_vec();
        reduced[pivot] -= 1;
        for j in 0..k.len() {
            let weight = self.cov.get(pivot, j);
            let count = reduced[j];
            if count == 0 || weight.is_zero() {
                continue;
            }
            reduced[j] -= 1;
            let sub = self.moment(&reduced);
            reduced[j] += 1;
            if !sub.is_zero() {
                acc = acc + S::from_i64(count as i64) * weight.clone() * sub;
            }
        }
        self.memo.insert(k.to_vec(), acc.clone());
        acc
    }
}

/// Residual `E[X_i x^m] - sum_j s_ij E[d_j x^m]` of the Gaussian
/// integration-by-parts identity, with both sides computed by matching
/// enumeration.
pub fn stein_identity_residual<S: Scalar>(cov: &CovarianceMatrix<S>, m: &ExponentVector, i: usize) -> Result<S> {
    check_dims(cov, m)?;
    if i >= m.len() {
        return Err(GpiError::DimensionMismatch { expected: m.len(), found: i + 1 });
    }
    let mut raised = m.as_slice().to_vec();
    raised[i] += 1;
    let lhs = wick_bruteforce(cov, &ExponentVector(raised))?;
    let mut rhs = S::zero();
    for (j, &mj) in m.as_slice().iter().enumerate() {
        if mj == 0 {
            continue;
        }
        let mut lowered = m.as_slice().to_vec();
        lowered[j] -= 1;
        let inner = wick_bruteforce(cov, &ExponentVector(lowered))?;
        rhs = rhs + cov.get(i, j).clone() * S::from_i64(mj as i64) * inner;
    }
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{double_factorial, rational};
    use crate::Rational;
    use num_bigint::BigInt;
    use num_traits::Zero;

    fn ev(k: &[u32]) -> ExponentVector {
        ExponentVector::new(k.to_vec()).unwrap()
    }

    #[test]
    fn single_pairing() {
        let cov = CovarianceMatrix::new(1, vec![rational(7, 3)]).unwrap();
        assert_eq!(wick_bruteforce(&cov, &ev(&[2])).unwrap(), rational(7, 3));
        assert_eq!(moment(&cov, &ev(&[2])).unwrap(), rational(7, 3));
    }

    #[test]
    fn two_dimensional_closed_form() {
        // three matchings of {1,1,2,2}: (11)(22), (12)(12) twice
        let t = rational(2, 5);
        let cov = CovarianceMatrix::from_correlations(2, std::slice::from_ref(&t)).unwrap();
        let expected = rational(1, 1) + rational(2, 1) * t.clone() * t;
        assert_eq!(wick_bruteforce(&cov, &ev(&[2, 2])).unwrap(), expected);
        assert_eq!(moment(&cov, &ev(&[2, 2])).unwrap(), expected);
    }

    #[test]
    fn odd_degree_vanishes() {
        let cov: CovarianceMatrix<Rational> =
            CovarianceMatrix::from_correlations(3, &[rational(1, 2), rational(1, 3), rational(1, 5)]).unwrap();
        for k in [[1, 0, 0], [1, 1, 1], [3, 2, 0], [0, 0, 5]] {
            assert!(wick_bruteforce(&cov, &ev(&k)).unwrap().is_zero());
            assert!(moment(&cov, &ev(&k)).unwrap().is_zero());
        }
    }

    #[test]
    fn standard_normal_sixth_moment() {
        let cov = CovarianceMatrix::<Rational>::identity(1);
        assert_eq!(moment(&cov, &ev(&[6])).unwrap(), rational(15, 1));
    }

    #[test]
    fn fourth_second_mixed_moment() {
        // brute force gives 3 + 12 a^2 for k = (4, 2, 0)
        let a = rational(-3, 7);
        let cov = CovarianceMatrix::from_correlations(3, &[a.clone(), rational(1, 2), rational(1, 4)]).unwrap();
        let expected = rational(3, 1) + rational(12, 1) * a.clone() * a;
        assert_eq!(wick_bruteforce(&cov, &ev(&[4, 2, 0])).unwrap(), expected);
        assert_eq!(moment(&cov, &ev(&[4, 2, 0])).unwrap(), expected);
    }

    #[test]
    fn diagonal_factorizes() {
        let diag = [rational(2, 1), rational(1, 3), rational(5, 4)];
        let cov = CovarianceMatrix::diagonal(&diag);
        let k = [4u32, 2, 6];
        let mut expected = rational(1, 1);
        for (d, &ki) in diag.iter().zip(&k) {
            let mut pow = rational(1, 1);
            for _ in 0..ki / 2 {
                pow *= d;
            }
            expected *= Rational::from_integer(double_factorial(ki as i64 - 1)) * pow;
        }
        assert_eq!(moment(&cov, &ev(&k)).unwrap(), expected);
    }

    #[test]
    fn degree_guard_and_dimension_checks() {
        let cov = CovarianceMatrix::<Rational>::identity(2);
        assert_eq!(wick_bruteforce(&cov, &ev(&[10, 8])), Err(GpiError::DegreeTooLarge { degree: 18, max: 16 }));
        assert!(matches!(moment(&cov, &ev(&[2, 2, 2])), Err(GpiError::DimensionMismatch { .. })));
        assert!(matches!(wick_bruteforce(&cov, &ev(&[2])), Err(GpiError::DimensionMismatch { .. })));
        // recursion has no degree cap
        assert_eq!(moment(&cov, &ev(&[10, 8])).unwrap(), Rational::from_integer(BigInt::from(945 * 105)));
    }

    #[test]
    fn rejects_asymmetric() {
        let err = CovarianceMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).unwrap_err();
        assert_eq!(err, GpiError::NotSymmetric { row: 0, col: 1 });
    }

    #[test]
    fn float_engine_matches_rational() {
        let cov = CovarianceMatrix::from_correlations(3, &[0.5, -0.25, 0.125]).unwrap();
        let exact = CovarianceMatrix::from_correlations(3, &[rational(1, 2), rational(-1, 4), rational(1, 8)]).unwrap();
        let k = ev(&[4, 2, 2]);
        let f = moment(&cov, &k).unwrap();
        let q = moment(&exact, &k).unwrap();
        assert!(f.ring_eq(&crate::Scalar::from_rational(&q)));
    }

    #[test]
    fn parses_exponents() {
        assert_eq!("2, 4,6".parse::<ExponentVector>().unwrap(), ev(&[2, 4, 6]));
        assert!("2,-1".parse::<ExponentVector>().is_err());
        assert_eq!(ev(&[6, 4, 2]).to_string(), "6,4,2");
    }
}
