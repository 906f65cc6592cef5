//! Seeded Gaussian sampling and Monte Carlo moment estimates, used as a
//! cross-check on the exact engines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::elliptope::sqrt_psd;
use crate::error::{GpiError, Result};
use crate::moments::{CovarianceMatrix, ExponentVector};

/// `count x n` row-major matrix of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
    seed: u64,
}

impl SampleMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

/// Draws `count` vectors `R g` with `R` the symmetric square root of `cov`
/// and `g` standard normal.
pub fn sample_gaussian(cov: &CovarianceMatrix<f64>, count: usize, seed: u64) -> Result<SampleMatrix> {
    if count == 0 {
        return Err(GpiError::InvalidInput("sample count must be positive".into()));
    }
    let root = sqrt_psd(cov)?;
    let n = cov.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(count * n);
    let mut g = vec![0.0; n];
    for _ in 0..count {
        for gi in g.iter_mut() {
            *gi = StandardNormal.sample(&mut rng);
        }
        for i in 0..n {
            let mut x = 0.0;
            for (j, gj) in g.iter().enumerate() {
                x += root[(i, j)] * gj;
            }
            data.push(x);
        }
    }
    Ok(SampleMatrix { dim: n, data, seed })
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    /// Distance from `exact` in units of the standard error.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = (self.estimate - exact).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn mc_moment(samples: &SampleMatrix, k: &ExponentVector) -> Result<McEstimate> {
    let count = samples.count();
    if count == 0 {
        return Err(GpiError::EmptySamples);
    }
    if k.len() != samples.dim() {
        return Err(GpiError::DimensionMismatch { expected: samples.dim(), found: k.len() });
    }
    let values: Vec<f64> =
        samples.rows().map(|row| row.iter().zip(k.as_slice()).map(|(x, &e)| x.powi(e as i32)).product()).collect();
    let n = count as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if count > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate { estimate: mean, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(k: &[u32]) -> ExponentVector {
        ExponentVector::new(k.to_vec()).unwrap()
    }

    #[test]
    fn identity_has_unit_variance() {
        let cov = CovarianceMatrix::<f64>::identity(3);
        let s = sample_gaussian(&cov, 100_000, 11).unwrap();
        for i in 0..3 {
            let mut k = vec![0; 3];
            k[i] = 2;
            let est = mc_moment(&s, &ev(&k)).unwrap();
            assert!(est.z_score(1.0) < 5.0, "{est:?}");
        }
    }

    #[test]
    fn degenerate_columns_coincide() {
        let cov = CovarianceMatrix::from_correlations(3, &[0.0, 0.0, 1.0]).unwrap();
        let s = sample_gaussian(&cov, 1000, 3).unwrap();
        for row in s.rows() {
            assert!((row[1] - row[2]).abs() <= 1e-12 * (1.0 + row[1].abs()));
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let cov = CovarianceMatrix::from_correlations(3, &[0.3, -0.2, 0.1]).unwrap();
        let a = sample_gaussian(&cov, 500, 42).unwrap();
        let b = sample_gaussian(&cov, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_gaussian(&cov, 500, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_indefinite() {
        let cov = CovarianceMatrix::from_correlations(3, &[1.0, 1.0, -1.0]).unwrap();
        assert!(matches!(sample_gaussian(&cov, 10, 0), Err(GpiError::NotPsd { .. })));
    }

    #[test]
    fn centered_first_moment() {
        let cov = CovarianceMatrix::from_correlations(3, &[0.5, 0.5, 0.5]).unwrap();
        let s = sample_gaussian(&cov, 200_000, 5).unwrap();
        let est = mc_moment(&s, &ev(&[1, 0, 0])).unwrap();
        assert!(est.z_score(0.0) < 5.0);
    }

    #[test]
    fn empty_and_mismatched() {
        let cov = CovarianceMatrix::<f64>::identity(2);
        let s = sample_gaussian(&cov, 3, 0).unwrap();
        assert!(matches!(mc_moment(&s, &ev(&[2, 2, 2])), Err(GpiError::DimensionMismatch { .. })));
        let empty = SampleMatrix { dim: 2, data: vec![], seed: 0 };
        assert_eq!(mc_moment(&empty, &ev(&[2, 2])), Err(GpiError::EmptySamples));
    }
}
