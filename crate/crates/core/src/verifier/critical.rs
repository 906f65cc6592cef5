use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::{norm, run_in_pool, PhiModel};
use crate::elliptope::{det3, CorrelationPoint, ElliptopeSampler};

pub const MAX_ITERATIONS: usize = 10_000;
pub const MAX_HALVINGS: usize = 60;
pub const GRADIENT_TOL: f64 = 1e-9;
pub const CLUSTER_TOL: f64 = 1e-6;

/// A converged descent run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointRecord {
    pub start: [f64; 3],
    pub point: [f64; 3],
    pub gradient_norm: f64,
    pub iterations: usize,
    pub at_origin: bool,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonConvergence {
    pub start: [f64; 3],
    pub last: [f64; 3],
    pub gradient_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub point: [f64; 3],
    pub members: usize,
    pub at_origin: bool,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalScan {
    pub starts: usize,
    pub converged: usize,
    pub clusters: Vec<Cluster>,
    pub max_gradient_norm: f64,
    pub nonconverged: Vec<NonConvergence>,
    #[serde(skip)]
    pub records: Vec<CriticalPointRecord>,
    pub passed: bool,
}

fn in_open_region(p: &CorrelationPoint<f64>) -> bool {
    p.max_abs() < 1.0 && det3(p) > 0.0
}

/// `count` seeded starts strictly inside the elliptope.
pub fn default_starts(count: usize, seed: u64) -> Vec<CorrelationPoint<f64>> {
    ElliptopeSampler::new(seed).filter(|p| det3(p) > 1e-6 && p.max_abs() < 1.0 - 1e-6).take(count).collect()
}

fn step(p: &CorrelationPoint<f64>, d: &Vector3<f64>, t: f64) -> CorrelationPoint<f64> {
    CorrelationPoint::new(p.a + t * d[0], p.b + t * d[1], p.c + t * d[2])
}

/// Safeguarded descent: Newton steps while the Hessian is positive definite
/// (accepted when they reduce the gradient norm), steepest descent with an
/// Armijo test otherwise. Steps leaving the open elliptope are halved.
fn descend(model: &PhiModel, start: &CorrelationPoint<f64>) -> Result<CriticalPointRecord, NonConvergence> {
    let mut x = start.clone();
    let mut iterations = 0;
    loop {
        let g = model.gradient_at(&x);
        let gnorm = norm(&g);
        if gnorm <= GRADIENT_TOL {
            return Ok(CriticalPointRecord {
                start: start.as_array(),
                at_origin: x.max_abs() <= CLUSTER_TOL,
                phi: model.value(&x),
                point: x.as_array(),
                gradient_norm: gnorm,
                iterations,
            });
        }
        let fail = |x: &CorrelationPoint<f64>, iterations| NonConvergence {
            start: start.as_array(),
            last: x.as_array(),
            gradient_norm: gnorm,
            iterations,
        };
        if iterations >= MAX_ITERATIONS {
            return Err(fail(&x, iterations));
        }
        iterations += 1;
        let gv = Vector3::from(g);
        let h = Matrix3::from(model.hessian_at(&x)).transpose();

        let mut next = None;
        if let Some(chol) = h.cholesky() {
            let d = -chol.solve(&gv);
            let mut t = 1.0;
            for _ in 0..=MAX_HALVINGS {
                let trial = step(&x, &d, t);
                if in_open_region(&trial) && norm(&model.gradient_at(&trial)) < gnorm {
                    next = Some(trial);
                    break;
                }
                t *= 0.5;
            }
        }
        if next.is_none() {
            let d = -gv;
            let f0 = model.value(&x);
            let mut t = 1.0;
            for _ in 0..=MAX_HALVINGS {
                let trial = step(&x, &d, t);
                if in_open_region(&trial) && model.value(&trial) <= f0 - 1e-4 * t * gnorm * gnorm {
                    next = Some(trial);
                    break;
                }
                t *= 0.5;
            }
        }
        match next {
            Some(trial) => x = trial,
            None => return Err(fail(&x, iterations)),
        }
    }
}

/// Runs the descent from every start and groups converged points within
/// `CLUSTER_TOL`. Passes when exactly one cluster forms, at the origin.
pub fn interior_critical_points(model: &PhiModel, starts: &[CorrelationPoint<f64>], workers: usize) -> CriticalScan {
    let outcomes: Vec<_> = run_in_pool(workers, || starts.par_iter().map(|s| descend(model, s)).collect());
    let mut records = Vec::new();
    let mut nonconverged = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(e) => nonconverged.push(e),
        }
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for r in &records {
        let found = clusters
            .iter_mut()
            .find(|c| c.point.iter().zip(&r.point).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() <= CLUSTER_TOL);
        match found {
            Some(c) => c.members += 1,
            None => clusters.push(Cluster { point: r.point, members: 1, at_origin: r.at_origin, phi: r.phi }),
        }
    }
    let max_gradient_norm = records.iter().map(|r| r.gradient_norm).fold(0.0, f64::max);
    CriticalScan {
        starts: starts.len(),
        converged: records.len(),
        passed: clusters.len() == 1 && clusters[0].at_origin,
        clusters,
        max_gradient_norm,
        nonconverged,
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::ExponentVector;

    #[test]
    fn origin_converges_immediately() {
        let m = PhiModel::new(&ExponentVector::from([2, 2, 2])).unwrap();
        let r = descend(&m, &CorrelationPoint::origin()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.gradient_norm, 0.0);
        assert!(r.at_origin);
    }

    #[test]
    fn single_cluster_for_222() {
        let m = PhiModel::new(&ExponentVector::from([2, 2, 2])).unwrap();
        let scan = interior_critical_points(&m, &default_starts(50, 0), 2);
        assert!(scan.passed, "{scan:?}");
        assert_eq!(scan.converged, 50);
        assert!(scan.max_gradient_norm <= GRADIENT_TOL);
    }

    #[test]
    fn starts_are_interior() {
        for s in default_starts(100, 3) {
            assert!(in_open_region(&s));
        }
    }
}
