//! Measured volume-growth constants: Gromov monotonicity, volume doubling,
//! reverse doubling and comparability of balls with different centers.

use super::{ManifoldModel, Point};
use crate::numeric::unit_ball_volume;
use serde::Serialize;

/// Geometry summary for a base point and a family of radii.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub inj: f64,
    pub conj: f64,
    pub k_max: f64,
    /// Largest `log(μ(B_R)/μ(B_r)) / log(R/r)` over radius pairs.
    pub vd_exponent: f64,
    /// Smallest `(μ(B_R)/μ(B_r)) / (R/r)^n` over radius pairs.
    pub a1: f64,
    /// Largest `μ(B_R(x1)) / μ(B_R(x2))` over center pairs and radii.
    pub a2: f64,
    pub gromov_violations: usize,
    pub gromov_table: Vec<(f64, f64)>,
}

/// `μ(B(x, r)) / |B_r|` on each radius.
pub fn gromov_ratios(m: &ManifoldModel, x: &Point, radii: &[f64]) -> Vec<(f64, f64)> {
    let n = m.dim() as i32;
    radii
        .iter()
        .map(|&r| (r, m.ball_volume(x, r) / (unit_ball_volume(m.dim()) * r.powi(n))))
        .collect()
}

/// Number of increases of the Gromov ratio along increasing radii, beyond `tol`.
pub fn gromov_violations(table: &[(f64, f64)], tol: f64) -> usize {
    let mut sorted = table.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.windows(2).filter(|w| w[1].1 > w[0].1 * (1.0 + tol)).count()
}

/// Volume-doubling exponent: the largest growth exponent over radius pairs.
pub fn vd_exponent(m: &ManifoldModel, x: &Point, radii: &[f64]) -> f64 {
    let vols: Vec<f64> = radii.iter().map(|&r| m.ball_volume(x, r)).collect();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..radii.len() {
        for j in 0..radii.len() {
            if radii[j] > radii[i] * (1.0 + 1e-12) {
                let e = (vols[j] / vols[i]).ln() / (radii[j] / radii[i]).ln();
                worst = worst.max(e);
            }
        }
    }
    worst
}

/// Reverse-doubling constant `a₁` over radius pairs below the injectivity radius.
pub fn rvd_constant(m: &ManifoldModel, x: &Point, radii: &[f64]) -> f64 {
    let n = m.dim() as i32;
    let inj = m.injectivity_radius(x);
    let rs: Vec<f64> = radii.iter().copied().filter(|&r| r < inj).collect();
    let vols: Vec<f64> = rs.iter().map(|&r| m.ball_volume(x, r)).collect();
    let mut best = 1.0f64;
    for i in 0..rs.len() {
        for j in 0..rs.len() {
            if rs[j] >= rs[i] {
                let a = (vols[j] / vols[i]) / (rs[j] / rs[i]).powi(n);
                best = best.min(a);
            }
        }
    }
    best
}

/// Comparability constant `a₂` over pairs of centers and common radii below
/// both injectivity radii.
pub fn comparability_constant(m: &ManifoldModel, centers: &[Point], radii: &[f64]) -> f64 {
    let mut worst = 1.0f64;
    for &r in radii {
        let vols: Vec<Option<f64>> = centers
            .iter()
            .map(|c| (r < m.injectivity_radius(c)).then(|| m.ball_volume(c, r)))
            .collect();
        for a in vols.iter().flatten() {
            for b in vols.iter().flatten() {
                worst = worst.max(a / b);
            }
        }
    }
    worst
}

/// Full report for base point `x`, radius grid `radii` and comparison centers.
pub fn geometry_report(m: &ManifoldModel, x: &Point, radii: &[f64], centers: &[Point]) -> GeometryReport {
    let table = gromov_ratios(m, x, radii);
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    GeometryReport {
        inj: m.injectivity_radius(x),
        conj: m.conjugate_radius(x),
        k_max: m.sectional_curvature_sup(x, r_max).value,
        vd_exponent: vd_exponent(m, x, radii),
        a1: rvd_constant(m, x, radii),
        a2: comparability_constant(m, centers, radii),
        gromov_violations: gromov_violations(&table, 1e-9),
        gromov_table: table,
    }
}
