//! End-to-end verification of the three-dimensional Gaussian product
//! inequality for even exponent triples.
//!
//! The identities the argument manipulates are checked exactly over
//! `Q[a, b, c]`; the conclusion (the moment map is uniquely minimized at the
//! identity) is checked numerically by grid scans, constrained descent and
//! boundary sweeps. None of this is a formal certificate.

mod all_twos;
mod checks;
mod critical;
mod report;
mod scan;

pub use all_twos::{all_twos_outcome, check_all_twos, random_factor_covariance, AllTwosOutcome, AllTwosResult};
pub use checks::{
    hessian_at_origin, lagrange_combination_check, lagrange_residual, mc_exponents, monte_carlo_spot_check,
    HessianResult, LagrangeResult, McCheck, MonteCarloResult, LAGRANGE_TOL, MC_MAX_DEGREE, MC_Z_LIMIT,
};
pub use critical::{
    default_starts, interior_critical_points, Cluster, CriticalPointRecord, CriticalScan, NonConvergence, CLUSTER_TOL,
    GRADIENT_TOL,
};
pub use report::{
    induction_chain, verify_gpi3, ChainLink, ChainReport, IdentityResults, ReportConfig, Verdict, VerificationReport,
    SCHEMA_VERSION,
};
pub use scan::{
    boundary_scan, grid_scan, grid_scan_rows, write_scan_csv, BoundaryScan, GridScan, ScanRow, SCAN_CSV_HEADER,
};

use num_rational::BigRational;

use crate::elliptope::CorrelationPoint;
use crate::error::{GpiError, Result};
use crate::moments::ExponentVector;
use crate::polynomial::{phi_polynomial, CompiledPolynomial, MomentPolynomial, Var, MAX_PHI_DEGREE};

/// Tunables for a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub resolution: f64,
    pub seed: u64,
    pub workers: usize,
    pub mc_samples: usize,
    pub mc_points: usize,
    pub critical_starts: usize,
    pub face_points: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            seed: 0,
            workers: std::thread::available_parallelism().map(usize::from).unwrap_or(1),
            mc_samples: 1_000_000,
            mc_points: 3,
            critical_starts: 50,
            face_points: 100,
        }
    }
}

/// The moment map for one exponent triple with its exact and float
/// derivatives.
#[derive(Debug, Clone)]
pub struct PhiModel {
    pub exponents: [u32; 3],
    pub phi: MomentPolynomial,
    pub gradient: [MomentPolynomial; 3],
    pub value_at_identity: BigRational,
    value: CompiledPolynomial,
    grad: [CompiledPolynomial; 3],
    hess: [[CompiledPolynomial; 3]; 3],
}

impl PhiModel {
    /// Requires even exponents `>= 2` with sum at most the polynomial cap.
    pub fn new(p: &ExponentVector) -> Result<Self> {
        let exponents = validate_even_triple(p)?;
        let phi = phi_polynomial(p)?;
        let gradient = Var::ALL.map(|v| phi.differentiate(v));
        let hess = Var::ALL.map(|u| {
            let gu = phi.differentiate(u);
            Var::ALL.map(|v| gu.differentiate(v).compile())
        });
        Ok(Self {
            exponents,
            value_at_identity: phi.constant_term(),
            value: phi.compile(),
            grad: gradient.clone().map(|g| g.compile()),
            phi,
            gradient,
            hess,
        })
    }

    pub fn value(&self, p: &CorrelationPoint<f64>) -> f64 {
        self.value.eval_point(p)
    }

    pub fn gradient_at(&self, p: &CorrelationPoint<f64>) -> [f64; 3] {
        [0, 1, 2].map(|i| self.grad[i].eval_point(p))
    }

    pub fn hessian_at(&self, p: &CorrelationPoint<f64>) -> [[f64; 3]; 3] {
        [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.hess[i][j].eval_point(p)))
    }

    pub fn identity_value_f64(&self) -> f64 {
        crate::Scalar::from_rational(&self.value_at_identity)
    }

    pub fn exponent_vector(&self) -> ExponentVector {
        ExponentVector::from(self.exponents)
    }
}

/// Rejects anything other than three even exponents `>= 2` summing to at most
/// the degree cap.
pub fn validate_even_triple(p: &ExponentVector) -> Result<[u32; 3]> {
    let &[p1, p2, p3] = p.as_slice() else {
        return Err(GpiError::InvalidExponents(format!("expected three exponents, got {}", p.len())));
    };
    if !p.all_even() {
        return Err(GpiError::InvalidExponents("exponents must be even".into()));
    }
    if [p1, p2, p3].iter().any(|&x| x < 2) {
        return Err(GpiError::InvalidExponents("exponents must be at least 2".into()));
    }
    let degree = p1 + p2 + p3;
    if degree > MAX_PHI_DEGREE {
        return Err(GpiError::DegreeTooLarge { degree, max: MAX_PHI_DEGREE });
    }
    Ok([p1, p2, p3])
}

/// Runs `job` on a dedicated pool of `workers` threads. Parallel iterators
/// inside preserve input order, so results do not depend on the worker count.
pub(crate) fn run_in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

pub(crate) fn norm(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_messages() {
        let err = PhiModel::new(&ExponentVector::from([3, 2, 2])).unwrap_err();
        assert_eq!(err.to_string(), "invalid exponents: exponents must be even");
        assert!(PhiModel::new(&ExponentVector::from([0, 2, 2])).is_err());
        assert!(PhiModel::new(&ExponentVector::from([20, 20, 2])).is_err());
        assert!(PhiModel::new(&ExponentVector::new(vec![2, 2]).unwrap()).is_err());
    }

    #[test]
    fn model_derivatives() {
        let m = PhiModel::new(&ExponentVector::from([2, 2, 2])).unwrap();
        let p = CorrelationPoint::new(0.1, -0.2, 0.3);
        let g = m.gradient_at(&p);
        let expected = [4.0 * 0.1 + 8.0 * -0.2 * 0.3, 4.0 * -0.2 + 8.0 * 0.1 * 0.3, 4.0 * 0.3 + 8.0 * 0.1 * -0.2];
        for (x, y) in g.iter().zip(expected) {
            assert!((x - y).abs() < 1e-14);
        }
        let h = m.hessian_at(&p);
        assert!((h[0][0] - 4.0).abs() < 1e-14);
        assert!((h[0][1] - 8.0 * 0.3).abs() < 1e-14);
        assert_eq!(m.identity_value_f64(), 1.0);
    }
}
