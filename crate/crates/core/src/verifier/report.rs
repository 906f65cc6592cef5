use std::fmt::{self, Write as _};

use serde::Serialize;
use serde_json::Value;

use super::{
    boundary_scan, default_starts, grid_scan, hessian_at_origin, interior_critical_points, lagrange_combination_check,
    monte_carlo_spot_check, validate_even_triple, BoundaryScan, CriticalScan, GridScan, HessianResult, LagrangeResult,
    MonteCarloResult, PhiModel, VerifyConfig,
};
use crate::error::Result;
use crate::moments::ExponentVector;
use crate::polynomial::{check_derivative_identity, check_edge_reduction, check_stein_reduction, IdentitySuite};
use crate::scalar::rational_to_string;

pub const SCHEMA_VERSION: &str = "gpikit-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_pass() { "PASS" } else { "FAIL" })
    }
}

/// Everything a report depends on. The worker count is absent: it changes
/// scheduling, never results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub resolution: f64,
    pub seed: u64,
    pub mc_samples: usize,
    pub mc_points: usize,
    pub critical_starts: usize,
    pub face_points: usize,
}

impl From<&VerifyConfig> for ReportConfig {
    fn from(c: &VerifyConfig) -> Self {
        Self {
            resolution: c.resolution,
            seed: c.seed,
            mc_samples: c.mc_samples,
            mc_points: c.mc_points,
            critical_starts: c.critical_starts,
            face_points: c.face_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResults {
    pub derivative: IdentitySuite,
    pub stein_reduction: IdentitySuite,
    pub edge_reduction: IdentitySuite,
}

impl IdentityResults {
    pub fn compute(p: &ExponentVector) -> Result<Self> {
        Ok(Self {
            derivative: check_derivative_identity(p)?,
            stein_reduction: check_stein_reduction(p)?,
            edge_reduction: check_edge_reduction(p)?,
        })
    }

    pub fn passed(&self) -> bool {
        self.derivative.passed && self.stein_reduction.passed && self.edge_reduction.passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: String,
    pub tool_version: String,
    pub exponents: String,
    pub config: ReportConfig,
    /// `Phi(I) = prod (p_i - 1)!!`, exact.
    pub phi_identity: String,
    pub phi_terms: usize,
    pub grid_scan: GridScan,
    pub interior_critical_points: CriticalScan,
    pub boundary_scan: BoundaryScan,
    pub lagrange_combination: LagrangeResult,
    pub hessian_at_origin: HessianResult,
    pub identities: IdentityResults,
    pub monte_carlo: MonteCarloResult,
    /// Minimizer identified with independence: unit diagonal and zero
    /// correlations.
    pub equality_case: String,
    pub verdict: Verdict,
}

impl VerificationReport {
    /// JSON with lexicographically sorted keys.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report is serializable")
    }

    pub fn text_summary(&self) -> String {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut s = String::new();
        let _ = writeln!(s, "GPI3({}) verification", self.exponents);
        let _ = writeln!(s, "  Phi(I3) = {}  ({} terms)", self.phi_identity, self.phi_terms);
        let g = &self.grid_scan;
        let _ = writeln!(
            s,
            "  [{}] grid scan: {} points at resolution {}, min {} at ({}, {}, {}), margin {}",
            mark(g.passed),
            g.points,
            g.resolution,
            g.min_value,
            g.argmin[0],
            g.argmin[1],
            g.argmin[2],
            g.margin
        );
        let c = &self.interior_critical_points;
        let _ = writeln!(
            s,
            "  [{}] interior critical points: {}/{} starts converged into {} cluster(s)",
            mark(c.passed),
            c.converged,
            c.starts,
            c.clusters.len()
        );
        let b = &self.boundary_scan;
        let _ = writeln!(
            s,
            "  [{}] boundary scan: face min {}, edge min {}, margin {}",
            mark(b.passed),
            b.face_min,
            b.edge_min,
            b.margin
        );
        let l = &self.lagrange_combination;
        let _ = writeln!(
            s,
            "  [{}] face kernel combination: {} points, worst residual {:e}, worst adjugate residual {:e}",
            mark(l.passed),
            l.points,
            l.worst_residual,
            l.worst_adjugate_residual
        );
        let h = &self.hessian_at_origin;
        let _ = writeln!(
            s,
            "  [{}] hessian at origin: diag({}, {}, {})",
            mark(h.passed),
            h.matrix[0][0],
            h.matrix[1][1],
            h.matrix[2][2]
        );
        let i = &self.identities;
        for suite in [&i.derivative, &i.stein_reduction, &i.edge_reduction] {
            let _ =
                writeln!(s, "  [{}] identities: {} ({} checks)", mark(suite.passed), suite.suite, suite.checks.len());
        }
        let m = &self.monte_carlo;
        let worst_z = m.checks.iter().map(|c| c.z_score).fold(0.0, f64::max);
        let _ = writeln!(
            s,
            "  [{}] monte carlo ({}): {} points x {} samples, worst z {:.3}",
            mark(m.passed),
            m.exponents,
            m.checks.len(),
            m.samples,
            worst_z
        );
        let _ = writeln!(s, "  verdict: {}", self.verdict);
        s
    }
}

/// Runs every numerical and exact check for one even exponent triple.
pub fn verify_gpi3(p: &ExponentVector, config: &VerifyConfig) -> Result<VerificationReport> {
    let model = PhiModel::new(p)?;
    let workers = config.workers;
    let grid = grid_scan(&model, config.resolution, workers)?;
    let starts = default_starts(config.critical_starts, config.seed);
    let critical = interior_critical_points(&model, &starts, workers);
    let boundary = boundary_scan(&model, config.resolution, workers)?;
    let lagrange = lagrange_combination_check(&model, config.face_points, config.seed, workers);
    let hessian = hessian_at_origin(&model);
    let identities = IdentityResults::compute(p)?;
    let monte_carlo = monte_carlo_spot_check(&model, config.mc_points, config.mc_samples, config.seed, workers)?;

    let ok = grid.passed
        && critical.passed
        && boundary.passed
        && lagrange.passed
        && hessian.passed
        && identities.passed()
        && monte_carlo.passed;
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: TOOL_VERSION.into(),
        exponents: p.to_string(),
        config: config.into(),
        phi_identity: rational_to_string(&model.value_at_identity),
        phi_terms: model.phi.num_terms(),
        grid_scan: grid,
        interior_critical_points: critical,
        boundary_scan: boundary,
        lagrange_combination: lagrange,
        hessian_at_origin: hessian,
        identities,
        monte_carlo,
        equality_case: "a = b = c = 0 (independent components)".into(),
        verdict: Verdict::from_bool(ok),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainLink {
    pub from: String,
    pub to: String,
    /// 1-based index of the exponent lowered by two.
    pub reduced_index: usize,
    pub identity: IdentitySuite,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub schema_version: String,
    pub start: String,
    pub length: usize,
    pub links: Vec<ChainLink>,
    pub base: VerificationReport,
    pub passed: bool,
}

impl ChainReport {
    pub fn text_summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "induction chain from ({}) : {} link(s)", self.start, self.length);
        for link in &self.links {
            let _ = writeln!(
                s,
                "  [{}] ({}) -> ({}) reducing p{}",
                if link.passed { "PASS" } else { "FAIL" },
                link.from,
                link.to,
                link.reduced_index
            );
        }
        let _ = writeln!(s, "  base (2,2,2): {}", self.base.verdict);
        let _ = writeln!(s, "  verdict: {}", Verdict::from_bool(self.passed));
        s
    }
}

/// Lowers the largest exponent (first on ties) by two until `(2, 2, 2)`,
/// checking the reduction identity exactly at every link.
pub fn induction_chain(p: &ExponentVector, config: &VerifyConfig) -> Result<ChainReport> {
    let mut current = validate_even_triple(p)?;
    let mut links = Vec::new();
    while current != [2, 2, 2] {
        let max = *current.iter().max().expect("three");
        let idx = current.iter().position(|&x| x == max).expect("max exists");
        let mut next = current;
        next[idx] -= 2;
        let identity = check_stein_reduction(&ExponentVector::from(current))?;
        let passed = identity.passed;
        links.push(ChainLink {
            from: ExponentVector::from(current).to_string(),
            to: ExponentVector::from(next).to_string(),
            reduced_index: idx + 1,
            identity,
            passed,
        });
        current = next;
    }
    let base = verify_gpi3(&ExponentVector::from([2, 2, 2]), config)?;
    let passed = links.iter().all(|l| l.passed) && base.verdict.is_pass();
    Ok(ChainReport {
        schema_version: SCHEMA_VERSION.into(),
        start: p.to_string(),
        length: links.len(),
        links,
        base,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig { resolution: 0.1, mc_samples: 100_000, workers: 2, ..VerifyConfig::default() }
    }

    #[test]
    fn verify_222() {
        let r = verify_gpi3(&ExponentVector::from([2, 2, 2]), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.text_summary());
        assert_eq!(r.phi_identity, "1");
    }

    #[test]
    fn chain_lengths() {
        let c = induction_chain(&ExponentVector::from([2, 2, 2]), &quick()).unwrap();
        assert_eq!(c.length, 0);
        assert!(c.passed);
        let c = induction_chain(&ExponentVector::from([6, 4, 2]), &quick()).unwrap();
        assert_eq!(c.length, 3);
        assert!(c.passed);
        assert_eq!(c.links[0].from, "6,4,2");
        assert_eq!(c.links[0].to, "4,4,2");
        assert_eq!(c.links[1].to, "2,4,2");
    }

    #[test]
    fn json_keys_sorted() {
        let r = verify_gpi3(&ExponentVector::from([2, 2, 2]), &quick()).unwrap();
        let text = serde_json::to_string(&r.to_json()).unwrap();
        let first_keys: Vec<&str> = ["\"boundary_scan\"", "\"config\"", "\"equality_case\""].into_iter().collect();
        let positions: Vec<usize> = first_keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
