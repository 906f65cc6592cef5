//! Geometry of the 3x3 correlation elliptope: determinant and its gradient,
//! region classification, kernel vectors of singular points, boundary sheets,
//! point streams and PSD square roots.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GpiError, Result};
use crate::moments::CovarianceMatrix;
use crate::scalar::Scalar;

pub const EPS_PSD: f64 = 1e-12;
pub const EPS_DET: f64 = 1e-12;
pub const EPS_EDGE: f64 = 1e-12;
pub const SINGULAR_TOL: f64 = 1e-9;
pub const ADJUGATE_TOL: f64 = 1e-8;

/// Off-diagonal correlations `(a, b, c) = (s_12, s_13, s_23)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationPoint<S> {
    pub a: S,
    pub b: S,
    pub c: S,
}

impl<S: Scalar> CorrelationPoint<S> {
    pub fn new(a: S, b: S, c: S) -> Self {
        Self { a, b, c }
    }

    pub fn origin() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    pub fn covariance(&self) -> CovarianceMatrix<S> {
        CovarianceMatrix::from_correlations(3, &[self.a.clone(), self.b.clone(), self.c.clone()])
            .expect("three correlations")
    }
}

impl CorrelationPoint<f64> {
    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    pub fn classify(&self) -> RegionLabel {
        let det = det3(self);
        let m = self.max_abs();
        if m > 1.0 + EPS_EDGE || det < -EPS_DET {
            RegionLabel::Outside
        } else if m >= 1.0 - EPS_EDGE {
            RegionLabel::Edge
        } else if det > EPS_DET {
            RegionLabel::Interior
        } else {
            RegionLabel::Face
        }
    }
}

impl CorrelationPoint<BigRational> {
    pub fn to_f64(&self) -> CorrelationPoint<f64> {
        CorrelationPoint::new(f64::from_rational(&self.a), f64::from_rational(&self.b), f64::from_rational(&self.c))
    }

    /// Exact classification with zero tolerances.
    pub fn classify(&self) -> RegionLabel {
        let det = det3(self);
        let max = [&self.a, &self.b, &self.c].into_iter().map(|x| x.abs()).max().expect("three");
        let unit = BigRational::from_integer(BigInt::from(1));
        if max > unit || det.is_negative() {
            RegionLabel::Outside
        } else if max == unit {
            RegionLabel::Edge
        } else if det.is_positive() {
            RegionLabel::Interior
        } else {
            RegionLabel::Face
        }
    }
}

impl fmt::Display for CorrelationPoint<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// Stratum of the closed elliptope a point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionLabel {
    Interior,
    /// `det = 0` with every correlation strictly inside `(-1, 1)`.
    Face,
    /// Some correlation equal to `+-1`.
    Edge,
    Outside,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Interior => "interior",
            RegionLabel::Face => "face",
            RegionLabel::Edge => "edge",
            RegionLabel::Outside => "outside",
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `det [[1, a, b], [a, 1, c], [b, c, 1]] = 1 + 2abc - a^2 - b^2 - c^2`.
pub fn det3<S: Scalar>(p: &CorrelationPoint<S>) -> S {
    let (a, b, c) = (p.a.clone(), p.b.clone(), p.c.clone());
    let two = S::from_i64(2);
    S::one() + two * a.clone() * b.clone() * c.clone() - a.clone() * a - b.clone() * b - c.clone() * c
}

/// Gradient of [`det3`] in `(a, b, c)`: `(2(bc - a), 2(ac - b), 2(ab - c))`.
pub fn grad_det<S: Scalar>(p: &CorrelationPoint<S>) -> [S; 3] {
    let (a, b, c) = (p.a.clone(), p.b.clone(), p.c.clone());
    let two = S::from_i64(2);
    [
        two.clone() * (b.clone() * c.clone() - a.clone()),
        two.clone() * (a.clone() * c.clone() - b.clone()),
        two * (a * b - c),
    ]
}

/// Unit kernel vector of a singular correlation matrix, first nonzero
/// component positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelVector(pub [f64; 3]);

fn correlation_matrix(p: &CorrelationPoint<f64>) -> Matrix3<f64> {
    Matrix3::new(1.0, p.a, p.b, p.a, 1.0, p.c, p.b, p.c, 1.0)
}

pub fn kernel_vector(p: &CorrelationPoint<f64>) -> Result<KernelVector> {
    let det = det3(p);
    if det.abs() > SINGULAR_TOL {
        return Err(GpiError::NotSingular { det });
    }
    let eig = SymmetricEigen::new(correlation_matrix(p));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    if eig.eigenvalues[order[1]] <= SINGULAR_TOL {
        return Err(GpiError::RankDeficient);
    }
    let mut v: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    v /= v.norm();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v = -v;
        }
    }
    Ok(KernelVector([v[0], v[1], v[2]]))
}

/// `|| Sigma alpha ||` for the correlation matrix at `p`.
pub fn kernel_residual(p: &CorrelationPoint<f64>, alpha: &KernelVector) -> f64 {
    (correlation_matrix(p) * Vector3::from(alpha.0)).norm()
}

/// Outcome of matching `grad det` against `(b1 b2, b1 b3, b2 b3)` with
/// `b = lambda * alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjugateCheck {
    pub lambda: f64,
    pub residual: f64,
    pub kernel_residual: f64,
    pub passed: bool,
}

pub fn check_adjugate_identity(p: &CorrelationPoint<f64>) -> Result<AdjugateCheck> {
    let alpha = kernel_vector(p)?;
    let [x, y, z] = alpha.0;
    let products = [x * y, x * z, y * z];
    let grad = grad_det(p);
    let pp: f64 = products.iter().map(|v| v * v).sum();
    let gp: f64 = grad.iter().zip(&products).map(|(g, v)| g * v).sum();
    let lambda_sq = if pp > 0.0 { gp / pp } else { 0.0 };
    let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let diff = grad.iter().zip(&products).map(|(g, v)| (g - lambda_sq * v).powi(2)).sum::<f64>().sqrt();
    let residual = if gnorm > 0.0 { diff / gnorm } else { diff };
    let kernel_residual = kernel_residual(p, &alpha);
    Ok(AdjugateCheck {
        lambda: lambda_sq.max(0.0).sqrt(),
        residual,
        kernel_residual,
        passed: lambda_sq > 0.0 && residual <= ADJUGATE_TOL && kernel_residual <= SINGULAR_TOL,
    })
}

/// Roots in `c` of `det3(a, b, c) = 0`: `ab -+ sqrt((1 - a^2)(1 - b^2))`,
/// ascending. Empty when `|a| > 1` or `|b| > 1`.
pub fn boundary_sheets(a: f64, b: f64) -> Vec<f64> {
    let radicand = (1.0 - a * a) * (1.0 - b * b);
    if radicand < 0.0 || a.abs() > 1.0 || b.abs() > 1.0 {
        return Vec::new();
    }
    let centre = a * b;
    if radicand == 0.0 {
        return vec![centre.clamp(-1.0, 1.0)];
    }
    let r = radicand.sqrt();
    vec![(centre - r).clamp(-1.0, 1.0), (centre + r).clamp(-1.0, 1.0)]
}

/// Point on the cubic lattice with its determinant and region.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub point: CorrelationPoint<f64>,
    pub det: f64,
    pub region: RegionLabel,
    /// Exact coordinates when the spacing divides one.
    pub exact: Option<CorrelationPoint<BigRational>>,
}

/// Lattice of spacing `resolution` restricted to the elliptope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    resolution: f64,
    /// `Some(n)` when `1 / resolution` is the integer `n`.
    divisions: Option<i64>,
    half_width: i64,
}

impl Grid {
    pub fn new(resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution <= 1.0) {
            return Err(GpiError::InvalidInput(format!("resolution must lie in (0, 1], got {resolution}")));
        }
        let inverse = 1.0 / resolution;
        let rounded = inverse.round();
        let divisions = ((inverse - rounded).abs() <= 1e-9 * rounded).then_some(rounded as i64);
        let half_width = divisions.unwrap_or_else(|| (inverse + 1e-9).floor() as i64);
        Ok(Self { resolution, divisions, half_width })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Lattice coordinate of step `k`.
    pub fn coordinate(&self, k: i64) -> f64 {
        match self.divisions {
            Some(n) => k as f64 / n as f64,
            None => k as f64 * self.resolution,
        }
    }

    /// Steps `-w..=w` along each axis.
    pub fn steps(&self) -> std::ops::RangeInclusive<i64> {
        -self.half_width..=self.half_width
    }

    fn make_point(&self, i: i64, j: i64, k: i64) -> GridPoint {
        let point = CorrelationPoint::new(self.coordinate(i), self.coordinate(j), self.coordinate(k));
        match self.divisions {
            Some(n) => {
                // n^3 det3(i/n, j/n, k/n) in integers
                let det_scaled = n * n * n + 2 * i * j * k - n * (i * i + j * j + k * k);
                let max = i.abs().max(j.abs()).max(k.abs());
                let region = if det_scaled < 0 {
                    RegionLabel::Outside
                } else if max == n {
                    RegionLabel::Edge
                } else if det_scaled > 0 {
                    RegionLabel::Interior
                } else {
                    RegionLabel::Face
                };
                let q = |x: i64| BigRational::new(BigInt::from(x), BigInt::from(n));
                GridPoint {
                    det: det_scaled as f64 / (n * n * n) as f64,
                    point,
                    region,
                    exact: Some(CorrelationPoint::new(q(i), q(j), q(k))),
                }
            }
            None => GridPoint { det: det3(&point), region: point.classify(), point, exact: None },
        }
    }

    /// Every lattice point of the cube inside the closed elliptope, in
    /// lexicographic order of `(a, b, c)`.
    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        let steps = self.steps();
        steps.clone().flat_map(move |i| {
            let steps = self.steps();
            steps.clone().flat_map(move |j| {
                self.steps().map(move |k| self.make_point(i, j, k)).filter(|g| g.region != RegionLabel::Outside)
            })
        })
    }
}

/// Uniform rejection sampler on the elliptope.
pub struct ElliptopeSampler {
    rng: ChaCha8Rng,
    drawn: u64,
    accepted: u64,
}

impl ElliptopeSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), drawn: 0, accepted: 0 }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.drawn == 0 {
            0.0
        } else {
            self.accepted as f64 / self.drawn as f64
        }
    }
}

impl Iterator for ElliptopeSampler {
    type Item = CorrelationPoint<f64>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let p = CorrelationPoint::new(
                self.rng.random_range(-1.0..=1.0),
                self.rng.random_range(-1.0..=1.0),
                self.rng.random_range(-1.0..=1.0),
            );
            self.drawn += 1;
            if det3(&p) >= 0.0 {
                self.accepted += 1;
                return Some(p);
            }
        }
    }
}

pub fn sample_elliptope(count: usize, seed: u64) -> Vec<CorrelationPoint<f64>> {
    ElliptopeSampler::new(seed).take(count).collect()
}

/// Seeded points on the determinant-zero surface with all correlations in
/// `(-1, 1)`: `(a, b)` uniform, one of the two sheets chosen at random.
pub fn sample_face(count: usize, seed: u64) -> Vec<CorrelationPoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let upper: bool = rng.random();
        let sheets = boundary_sheets(a, b);
        let Some(&c) = (if upper { sheets.last() } else { sheets.first() }) else {
            continue;
        };
        let p = CorrelationPoint::new(a, b, c);
        if p.classify() == RegionLabel::Face {
            out.push(p);
        }
    }
    out
}

pub const POINT_CSV_HEADER: &str = "a,b,c,det,region";

/// Writes `a,b,c,det,region` rows.
pub fn write_points_csv<W: Write>(
    mut out: W,
    points: impl IntoIterator<Item = (CorrelationPoint<f64>, f64, RegionLabel)>,
) -> io::Result<()> {
    writeln!(out, "{POINT_CSV_HEADER}")?;
    for (p, det, region) in points {
        writeln!(out, "{},{},{},{},{}", p.a, p.b, p.c, det, region)?;
    }
    Ok(())
}

fn to_dmatrix(cov: &CovarianceMatrix<f64>) -> DMatrix<f64> {
    let n = cov.size();
    DMatrix::from_fn(n, n, |i, j| *cov.get(i, j))
}

pub fn min_eigenvalue(cov: &CovarianceMatrix<f64>) -> f64 {
    SymmetricEigen::new(to_dmatrix(cov)).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Symmetric square root by spectral decomposition; eigenvalues within
/// `EPS_PSD` below zero are clamped.
pub fn sqrt_psd(cov: &CovarianceMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(to_dmatrix(cov));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EPS_PSD {
        return Err(GpiError::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let r = q * DMatrix::from_diagonal(&roots) * q.transpose();
    Ok((&r + r.transpose()) * 0.5)
}

/// Cofactor expansion of a generic 3x3 determinant.
pub fn generic_det3<S: Scalar>(m: &[[S; 3]; 3]) -> S {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| {
        m[r1][c1].clone() * m[r2][c2].clone() - m[r1][c2].clone() * m[r2][c1].clone()
    };
    m[0][0].clone() * minor(1, 2, 1, 2) - m[0][1].clone() * minor(1, 2, 0, 2) + m[0][2].clone() * minor(1, 2, 0, 1)
}
