use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GpiError, Result};
use crate::moments::{moment, CovarianceMatrix, ExponentVector};
use crate::scalar::rational_to_string;
use crate::Rational;

/// `E[X_1^2 ... X_n^2]` against `prod E[X_i^2]` for one covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllTwosOutcome {
    pub lhs: String,
    pub rhs: String,
    pub equality: bool,
    pub off_diagonal_zero: bool,
    pub ratio: f64,
    /// `lhs >= rhs`, and equality only for a diagonal covariance.
    pub holds: bool,
}

/// Exact check on an arbitrary covariance. Working with `prod s_ii` on the
/// right avoids normalizing to unit diagonal, which would need square roots.
pub fn all_twos_outcome(cov: &CovarianceMatrix<Rational>) -> Result<AllTwosOutcome> {
    let n = cov.size();
    let lhs = moment(cov, &ExponentVector::new(vec![2; n])?)?;
    let rhs: Rational = (0..n).map(|i| cov.get(i, i).clone()).product();
    let off_diagonal_zero = (0..n).all(|i| (0..n).all(|j| i == j || cov.get(i, j).is_zero()));
    let equality = lhs == rhs;
    let ratio = if rhs.is_zero() { f64::NAN } else { (&lhs / &rhs).to_f64().unwrap_or(f64::NAN) };
    Ok(AllTwosOutcome {
        ratio,
        holds: lhs >= rhs && (!equality || off_diagonal_zero),
        lhs: rational_to_string(&lhs),
        rhs: rational_to_string(&rhs),
        equality,
        off_diagonal_zero,
    })
}

/// `Q^T Q` with `Q` an `n x n` matrix of integers in `[-4, 4]`, redrawn until
/// every diagonal entry is nonzero.
pub fn random_factor_covariance(n: usize, rng: &mut impl Rng) -> CovarianceMatrix<Rational> {
    loop {
        let q: Vec<i64> = (0..n * n).map(|_| rng.random_range(-4..=4)).collect();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let dot: i64 = (0..n).map(|r| q[r * n + i] * q[r * n + j]).sum();
                entries.push(Rational::from_integer(BigInt::from(dot)));
            }
        }
        if (0..n).all(|i| !entries[i * n + i].is_zero()) {
            return CovarianceMatrix::new(n, entries).expect("Q^T Q is symmetric");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllTwosResult {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    /// Smallest `lhs / rhs` seen, rounded to f64.
    pub min_ratio: f64,
    pub equality_cases: usize,
    pub violations: usize,
    pub passed: bool,
}

pub fn check_all_twos(n: usize, count: usize, seed: u64) -> Result<AllTwosResult> {
    if !(2..=6).contains(&n) {
        return Err(GpiError::InvalidInput(format!("dimension must lie in 2..=6, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut equality_cases = 0;
    let mut violations = 0;
    for _ in 0..count {
        let cov = random_factor_covariance(n, &mut rng);
        let outcome = all_twos_outcome(&cov)?;
        min_ratio = min_ratio.min(outcome.ratio);
        equality_cases += usize::from(outcome.equality);
        violations += usize::from(!outcome.holds);
    }
    Ok(AllTwosResult { n, count, seed, min_ratio, equality_cases, violations, passed: violations == 0 })
}
