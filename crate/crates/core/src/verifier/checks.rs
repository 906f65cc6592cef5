use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{run_in_pool, PhiModel};
use crate::elliptope::{
    check_adjugate_identity, kernel_vector, sample_face, CorrelationPoint, ElliptopeSampler, RegionLabel,
};
use crate::error::Result;
use crate::moments::ExponentVector;
use crate::polynomial::{phi_polynomial, Var};
use crate::sampling::{mc_moment, sample_gaussian};
use crate::scalar::{double_factorial, rational_to_string};

pub const LAGRANGE_TOL: f64 = 1e-8;
pub const MC_Z_LIMIT: f64 = 5.0;
/// Largest total degree whose sample moment has a usable standard error at
/// a million draws.
pub const MC_MAX_DEGREE: u32 = 12;

/// Pointwise check of `p1 a1 dPhi/dc + p2 a2 dPhi/db + p3 a3 dPhi/da = 0` on
/// the determinant-zero face, with `alpha` spanning the kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagrangeResult {
    pub points: usize,
    pub seed: u64,
    pub worst_residual: f64,
    pub worst_point: [f64; 3],
    pub failures: usize,
    pub worst_adjugate_residual: f64,
    pub adjugate_failures: usize,
    pub passed: bool,
}

/// Relative residual of the kernel combination at one singular point.
pub fn lagrange_residual(model: &PhiModel, p: &CorrelationPoint<f64>) -> Result<f64> {
    let alpha = kernel_vector(p)?.0;
    let [ga, gb, gc] = model.gradient_at(p);
    let [p1, p2, p3] = model.exponents.map(f64::from);
    let terms = [p1 * alpha[0] * gc, p2 * alpha[1] * gb, p3 * alpha[2] * ga];
    let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
    let sum: f64 = terms.iter().sum();
    Ok(if scale > 0.0 { sum.abs() / scale } else { sum.abs() })
}

pub fn lagrange_combination_check(model: &PhiModel, count: usize, seed: u64, workers: usize) -> LagrangeResult {
    let points = sample_face(count, seed);
    let outcomes: Vec<(f64, f64, bool)> = run_in_pool(workers, || {
        points
            .par_iter()
            .map(|p| {
                let lagrange = lagrange_residual(model, p).unwrap_or(f64::INFINITY);
                match check_adjugate_identity(p) {
                    Ok(adj) => (lagrange, adj.residual, adj.passed),
                    Err(_) => (lagrange, f64::INFINITY, false),
                }
            })
            .collect()
    });
    let mut worst = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if o.0 > outcomes[worst].0 {
            worst = i;
        }
    }
    let failures = outcomes.iter().filter(|o| o.0.is_nan() || o.0 > LAGRANGE_TOL).count();
    let adjugate_failures = outcomes.iter().filter(|o| !o.2).count();
    LagrangeResult {
        points: points.len(),
        seed,
        worst_residual: outcomes.get(worst).map_or(0.0, |o| o.0),
        worst_point: points.get(worst).map_or([0.0; 3], |p| p.as_array()),
        failures,
        worst_adjugate_residual: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        adjugate_failures,
        passed: failures == 0 && adjugate_failures == 0,
    }
}

/// Exact Hessian of the moment map at the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianResult {
    pub matrix: [[String; 3]; 3],
    pub expected_diagonal: [String; 3],
    pub diagonal_matches: bool,
    pub off_diagonal_zero: bool,
    pub positive_definite: bool,
    pub passed: bool,
}

/// Second derivatives at the origin. For `a = s_12` the diagonal entry is
/// `p1 p2 (p1-1)(p2-1) (p1-3)!! (p2-3)!! (p3-1)!!`, and cyclically.
pub fn hessian_at_origin(model: &PhiModel) -> HessianResult {
    let entries: Vec<Vec<BigRational>> = Var::ALL
        .iter()
        .map(|&u| {
            let gu = model.phi.differentiate(u);
            Var::ALL.iter().map(|&v| gu.differentiate(v).constant_term()).collect()
        })
        .collect();
    let [p1, p2, p3] = model.exponents.map(i64::from);
    let formula = |x: i64, y: i64, z: i64| -> BigRational {
        BigRational::from_integer(
            BigInt::from(x * y * (x - 1) * (y - 1))
                * double_factorial(x - 3)
                * double_factorial(y - 3)
                * double_factorial(z - 1),
        )
    };
    let expected = [formula(p1, p2, p3), formula(p1, p3, p2), formula(p2, p3, p1)];
    let diagonal_matches = (0..3).all(|i| entries[i][i] == expected[i]);
    let off_diagonal_zero = (0..3).all(|i| (0..3).all(|j| i == j || entries[i][j].is_zero()));
    let positive_definite = off_diagonal_zero && (0..3).all(|i| entries[i][i].is_positive());
    HessianResult {
        matrix: [0, 1, 2].map(|i| [0, 1, 2].map(|j| rational_to_string(&entries[i][j]))),
        expected_diagonal: expected.each_ref().map(rational_to_string),
        diagonal_matches,
        off_diagonal_zero,
        positive_definite,
        passed: diagonal_matches && off_diagonal_zero && positive_definite,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCheck {
    pub point: [f64; 3],
    pub sample_seed: u64,
    pub exact: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    /// Exponents actually estimated; see [`mc_exponents`].
    pub exponents: String,
    pub samples: usize,
    pub checks: Vec<McCheck>,
    pub passed: bool,
}

/// Lowers the largest exponent (first on ties) by two until the total degree
/// is at most [`MC_MAX_DEGREE`]. Higher sample moments are dominated by rare
/// draws and their estimated standard errors are not trustworthy.
pub fn mc_exponents(p: [u32; 3]) -> [u32; 3] {
    let mut q = p;
    while q.iter().sum::<u32>() > MC_MAX_DEGREE {
        let max = *q.iter().max().expect("three");
        let idx = q.iter().position(|&x| x == max).expect("max exists");
        q[idx] -= 2;
    }
    q
}

/// Compares Monte Carlo estimates against exact moments at `points` seeded
/// interior points, for the exponents given by [`mc_exponents`].
pub fn monte_carlo_spot_check(
    model: &PhiModel,
    points: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<MonteCarloResult> {
    let locations: Vec<CorrelationPoint<f64>> = ElliptopeSampler::new(seed.wrapping_add(0x6d63))
        .filter(|p| p.classify() == RegionLabel::Interior)
        .take(points)
        .collect();
    let exps = mc_exponents(model.exponents);
    let k = ExponentVector::from(exps);
    let target = if exps == model.exponents { model.phi.compile() } else { phi_polynomial(&k)?.compile() };
    let checks: Vec<Result<McCheck>> = run_in_pool(workers, || {
        locations
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let sample_seed = seed.wrapping_add(i as u64);
                let draws = sample_gaussian(&p.covariance(), samples, sample_seed)?;
                let est = mc_moment(&draws, &k)?;
                let exact = target.eval_point(p);
                let z = est.z_score(exact);
                Ok(McCheck {
                    point: p.as_array(),
                    sample_seed,
                    exact,
                    estimate: est.estimate,
                    std_error: est.std_error,
                    z_score: z,
                    passed: z <= MC_Z_LIMIT,
                })
            })
            .collect()
    });
    let checks = checks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloResult { exponents: k.to_string(), samples, passed: checks.iter().all(|c| c.passed), checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::ExponentVector;

    fn model(p: [u32; 3]) -> PhiModel {
        PhiModel::new(&ExponentVector::from(p)).unwrap()
    }

    #[test]
    fn lagrange_at_symmetric_face_point() {
        let m = model([2, 2, 2]);
        let p = CorrelationPoint::new(-0.5, -0.5, -0.5);
        assert_eq!(m.gradient_at(&p), [0.0, 0.0, 0.0]);
        assert_eq!(lagrange_residual(&m, &p).unwrap(), 0.0);
    }

    #[test]
    fn lagrange_sweep_small() {
        let r = lagrange_combination_check(&model([4, 2, 2]), 100, 1, 2);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.points, 100);
    }

    #[test]
    fn lagrange_fails_off_the_face() {
        assert!(lagrange_residual(&model([2, 2, 2]), &CorrelationPoint::new(0.1, 0.1, 0.1)).is_err());
    }

    #[test]
    fn hessian_values() {
        let h = hessian_at_origin(&model([2, 2, 2]));
        assert!(h.passed);
        assert_eq!(h.matrix[0], ["4".to_string(), "0".into(), "0".into()]);
        assert_eq!(h.matrix[2][2], "4");
        let h = hessian_at_origin(&model([4, 2, 2]));
        assert!(h.passed);
        assert_eq!(h.matrix[0][0], "24");
        assert_eq!(h.expected_diagonal[0], "24");
    }

    #[test]
    fn mc_exponent_reduction() {
        assert_eq!(mc_exponents([6, 4, 2]), [6, 4, 2]);
        assert_eq!(mc_exponents([10, 4, 4]), [4, 4, 4]);
        assert_eq!(mc_exponents([14, 14, 12]), [4, 4, 4]);
    }

    #[test]
    fn monte_carlo_small() {
        let r = monte_carlo_spot_check(&model([2, 2, 2]), 2, 200_000, 4, 2).unwrap();
        assert_eq!(r.checks.len(), 2);
        assert!(r.passed, "{r:?}");
    }
}
