use std::io::{self, Write};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use super::{run_in_pool, PhiModel};
use crate::elliptope::{boundary_sheets, CorrelationPoint, Grid, GridPoint, RegionLabel};
use crate::error::Result;
use crate::scalar::rational_to_string;

/// Minimum of the moment map over the lattice points of the elliptope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScan {
    pub resolution: f64,
    pub points: usize,
    pub min_value: f64,
    pub min_value_exact: Option<String>,
    pub argmin: [f64; 3],
    pub min_at_origin: bool,
    /// `min - Phi(I)`.
    pub margin: f64,
    pub margin_exact: Option<String>,
    /// Smallest `Phi - Phi(I)` over points at sup-distance `>= 2 * resolution`
    /// from the origin.
    pub min_far_margin: f64,
    pub strict_violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub point: CorrelationPoint<f64>,
    pub phi: f64,
    pub margin: f64,
}

pub const SCAN_CSV_HEADER: &str = "a,b,c,phi,margin";

fn evaluate_grid(model: &PhiModel, resolution: f64, workers: usize) -> Result<(Vec<GridPoint>, Vec<f64>)> {
    let grid = Grid::new(resolution)?;
    let points: Vec<GridPoint> = grid.points().collect();
    let values = run_in_pool(workers, || points.par_iter().map(|g| model.value(&g.point)).collect());
    Ok((points, values))
}

pub fn grid_scan_rows(model: &PhiModel, resolution: f64, workers: usize) -> Result<Vec<ScanRow>> {
    let (points, values) = evaluate_grid(model, resolution, workers)?;
    let base = model.identity_value_f64();
    Ok(points.into_iter().zip(values).map(|(g, phi)| ScanRow { point: g.point, phi, margin: phi - base }).collect())
}

pub fn write_scan_csv<W: Write>(mut out: W, rows: &[ScanRow]) -> io::Result<()> {
    writeln!(out, "{SCAN_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.point.a, r.point.b, r.point.c, r.phi, r.margin)?;
    }
    Ok(())
}

/// Evaluates the moment map on every grid point of the elliptope. Points
/// within `2 * resolution` of the origin in the sup norm are exempt from the
/// strict-excess requirement since the map is flat to first order there.
pub fn grid_scan(model: &PhiModel, resolution: f64, workers: usize) -> Result<GridScan> {
    let (points, values) = evaluate_grid(model, resolution, workers)?;
    let base = model.identity_value_f64();
    let far = 2.0 * resolution - 1e-12;
    let mut best = 0usize;
    let mut min_far_margin = f64::INFINITY;
    let mut strict_violations = 0;
    for (idx, (g, &v)) in points.iter().zip(&values).enumerate() {
        if v < values[best] {
            best = idx;
        }
        if g.point.max_abs() >= far {
            let margin = v - base;
            min_far_margin = min_far_margin.min(margin);
            if margin <= 0.0 {
                strict_violations += 1;
            }
        }
    }
    let arg = &points[best];
    let exact_min: Option<BigRational> = arg.exact.as_ref().map(|e| model.phi.evaluate(e));
    let min_at_origin = arg.point.max_abs() == 0.0;
    let margin = values[best] - base;
    Ok(GridScan {
        resolution,
        points: points.len(),
        min_value: values[best],
        min_value_exact: exact_min.as_ref().map(rational_to_string),
        argmin: arg.point.as_array(),
        min_at_origin,
        margin,
        margin_exact: exact_min.map(|m| rational_to_string(&(m - &model.value_at_identity))),
        min_far_margin,
        strict_violations,
        passed: min_at_origin && margin >= -1e-12 && strict_violations == 0,
    })
}

/// Minimum of the moment map over the determinant-zero faces and the six
/// edges of the elliptope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryScan {
    pub resolution: f64,
    pub face_points: usize,
    pub face_min: f64,
    pub face_argmin: [f64; 3],
    pub edge_points: usize,
    pub edge_min: f64,
    pub edge_min_exact: Option<String>,
    pub edge_argmin: [f64; 3],
    /// `min(face_min, edge_min) - Phi(I)`; must be strictly positive.
    pub margin: f64,
    pub passed: bool,
}

/// Edges: `|a| = 1` forces `c = a b`, and similarly for the others.
fn edge_point(edge: usize, t: f64) -> CorrelationPoint<f64> {
    match edge {
        0 => CorrelationPoint::new(1.0, t, t),
        1 => CorrelationPoint::new(-1.0, t, -t),
        2 => CorrelationPoint::new(t, 1.0, t),
        3 => CorrelationPoint::new(t, -1.0, -t),
        4 => CorrelationPoint::new(t, t, 1.0),
        _ => CorrelationPoint::new(t, -t, -1.0),
    }
}

pub fn boundary_scan(model: &PhiModel, resolution: f64, workers: usize) -> Result<BoundaryScan> {
    let grid = Grid::new(resolution)?;
    let coords: Vec<f64> = grid.steps().map(|k| grid.coordinate(k)).filter(|x| x.abs() <= 1.0).collect();

    let mut face = Vec::new();
    for &a in coords.iter().filter(|x| x.abs() < 1.0) {
        for &b in coords.iter().filter(|x| x.abs() < 1.0) {
            for c in boundary_sheets(a, b) {
                let p = CorrelationPoint::new(a, b, c);
                if p.classify() == RegionLabel::Face {
                    face.push(p);
                }
            }
        }
    }
    let edges: Vec<CorrelationPoint<f64>> =
        (0..6).flat_map(|e| coords.iter().map(move |&t| edge_point(e, t))).collect();

    let (face_values, edge_values): (Vec<f64>, Vec<f64>) = run_in_pool(workers, || {
        (face.par_iter().map(|p| model.value(p)).collect(), edges.par_iter().map(|p| model.value(p)).collect())
    });
    let argmin = |values: &[f64]| {
        values.iter().enumerate().fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((i, v)),
        })
    };
    let (face_min, face_argmin) = match argmin(&face_values) {
        Some((i, v)) => (v, face[i].as_array()),
        None => (f64::INFINITY, [f64::NAN; 3]),
    };
    let (ei, edge_min) = argmin(&edge_values).expect("edges are never empty");
    let edge_argmin = edges[ei].clone();
    let edge_min_exact = grid_exact(&grid, &edge_argmin).map(|e| rational_to_string(&model.phi.evaluate(&e)));
    let margin = face_min.min(edge_min) - model.identity_value_f64();
    Ok(BoundaryScan {
        resolution,
        face_points: face.len(),
        face_min,
        face_argmin,
        edge_points: edges.len(),
        edge_min,
        edge_min_exact,
        edge_argmin: edge_argmin.as_array(),
        margin,
        passed: margin > 0.0,
    })
}

/// Exact lattice coordinates of a point whose coordinates are grid values.
fn grid_exact(grid: &Grid, p: &CorrelationPoint<f64>) -> Option<CorrelationPoint<BigRational>> {
    let n = (1.0 / grid.resolution()).round();
    if ((1.0 / grid.resolution()) - n).abs() > 1e-9 * n {
        return None;
    }
    let q = |x: f64| BigRational::new(((x * n).round() as i64).into(), (n as i64).into());
    Some(CorrelationPoint::new(q(p.a), q(p.b), q(p.c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::ExponentVector;

    fn model(p: [u32; 3]) -> PhiModel {
        PhiModel::new(&ExponentVector::from(p)).unwrap()
    }

    #[test]
    fn grid_222_minimum_at_origin() {
        let scan = grid_scan(&model([2, 2, 2]), 0.25, 2).unwrap();
        assert!(scan.passed, "{scan:?}");
        assert_eq!(scan.argmin, [0.0, 0.0, 0.0]);
        assert_eq!(scan.min_value, 1.0);
        assert_eq!(scan.min_value_exact.as_deref(), Some("1"));
        assert_eq!(scan.margin_exact.as_deref(), Some("0"));
        assert_eq!(model([2, 2, 2]).value(&CorrelationPoint::new(1.0, 1.0, 1.0)), 15.0);
    }

    #[test]
    fn grid_422_minimum_value() {
        let scan = grid_scan(&model([4, 2, 2]), 0.1, 2).unwrap();
        assert!(scan.passed);
        assert_eq!(scan.min_value_exact.as_deref(), Some("3"));
    }

    #[test]
    fn boundary_222() {
        let m = model([2, 2, 2]);
        let scan = boundary_scan(&m, 0.05, 2).unwrap();
        assert!(scan.passed, "{scan:?}");
        assert_eq!(scan.edge_min, 3.0);
        assert_eq!(scan.edge_min_exact.as_deref(), Some("3"));
        let face_sample = CorrelationPoint::new(0.3, 0.3, boundary_sheets(0.3, 0.3)[0]);
        assert!(m.value(&face_sample) > 1.0);
        assert!(scan.face_min > 1.0);
    }

    #[test]
    fn rows_and_csv() {
        let rows = grid_scan_rows(&model([2, 2, 2]), 1.0, 1).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,b,c,phi,margin\n"));
        assert!(text.contains("\n0,0,0,1,0\n"));
        assert!(text.contains("\n1,1,1,15,14\n"));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let m = model([4, 2, 2]);
        assert_eq!(grid_scan(&m, 0.1, 1).unwrap(), grid_scan(&m, 0.1, 4).unwrap());
        assert_eq!(boundary_scan(&m, 0.1, 1).unwrap(), boundary_scan(&m, 0.1, 3).unwrap());
    }
}
