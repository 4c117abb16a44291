//! Fixed library of test functions used by the experiments. Every function
//! is built from distances to `z₀` so it makes sense on each model.

use crate::manifold::{ManifoldModel, Point};
use crate::operator::FieldFunction;

/// Library revision, recorded in reports.
pub const LIBRARY_VERSION: u32 = 1;

/// Smooth step: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn smooth_step(r: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = psi(2.0 - r);
    a / (a + psi(r - 1.0))
}

/// `d_{z₀}² · step(d_{z₀}/c)`; its Laplacian at `z₀` is `2n` on every model.
pub fn cutoff_square(m: &ManifoldModel, z0: Point, c: f64) -> FieldFunction {
    let m = *m;
    FieldFunction::new("cutoff square", 4.0 * c * c, move |p| {
        let d = m.dist(&z0, p);
        d * d * smooth_step(d / c)
    })
}

/// Last chart coordinate on a sphere: a first eigenfunction with `Δh = -nKh`.
pub fn sphere_height() -> FieldFunction {
    FieldFunction::new("height", 1.0, |p| p.coords[p.coords.len() - 1])
}

/// Saturating bowl `S tanh(a d²/(2R²S))`.
pub fn bowl(m: &ManifoldModel, z0: Point, r: f64, a: f64, s: f64) -> FieldFunction {
    let m = *m;
    FieldFunction::new("bowl", s, move |p| {
        let d = m.dist(&z0, p);
        s * (a * d * d / (2.0 * r * r) / s).tanh()
    })
}

/// Bowl plus a ripple `ε cos(5 d_y/R)` around a second point `y`.
pub fn wavy_bowl(m: &ManifoldModel, z0: Point, r: f64, a: f64, s: f64) -> FieldFunction {
    let mm = *m;
    let b = bowl(m, z0, r, a, s);
    let y = shifted_point(m, &z0, 2.0 * r);
    let eps = 0.01;
    FieldFunction::new("wavy bowl", s + eps, move |p| b.eval(p) + eps * (5.0 * mm.dist(&y, p) / r).cos())
}

/// A point at distance `t` from `z₀` along the first frame direction.
pub fn shifted_point(m: &ManifoldModel, z0: &Point, t: f64) -> Point {
    let e = m.frame(z0)[0];
    m.exp(z0, &(e * t))
}

/// `1 + 2 tanh(d²/(2R²))`, a paraboloid saturating at `d ≈ 2R`.
pub fn soft_paraboloid(m: &ManifoldModel, z0: Point, r: f64) -> FieldFunction {
    let m = *m;
    FieldFunction::new("soft paraboloid", 3.0, move |p| {
        let d = m.dist(&z0, p) / r;
        1.0 + 2.0 * (d * d / 2.0).tanh()
    })
}

/// `1/2 + exp(-4 d_y²/R²)` with `y` at distance `R/2` from `z₀`.
pub fn offset_bump(m: &ManifoldModel, z0: Point, r: f64) -> FieldFunction {
    let mm = *m;
    let y = shifted_point(m, &z0, 0.5 * r);
    FieldFunction::new("offset bump", 1.5, move |p| {
        let d = mm.dist(&y, p) / r;
        0.5 + (-4.0 * d * d).exp()
    })
}

/// `2 + tanh((d_y - d_y(z₀))/(2R))` with `y` at distance `4R`: close to an
/// affine function near `z₀`.
pub fn tilted_profile(m: &ManifoldModel, z0: Point, r: f64) -> FieldFunction {
    let mm = *m;
    let y = shifted_point(m, &z0, 4.0 * r);
    let base = m.dist(&y, &z0);
    FieldFunction::new("tilted profile", 3.0, move |p| 2.0 + ((mm.dist(&y, p) - base) / (2.0 * r)).tanh())
}

/// `((d/R)² + η²)^{1/4}` saturated at `10`: a `1/2`-Hölder cusp at `z₀`.
pub fn root_cusp(m: &ManifoldModel, z0: Point, r: f64, eta: f64) -> FieldFunction {
    let m = *m;
    FieldFunction::new("root cusp", 10.0, move |p| {
        let d = m.dist(&z0, p) / r;
        10.0 * ((d * d + eta * eta).sqrt().sqrt() / 10.0).tanh()
    })
}

/// `2 + tanh((d_y - d_y(z₀))/(20R))` with `y` at distance `10R`: Lipschitz
/// with a nonzero gradient at `z₀`.
pub fn ramp(m: &ManifoldModel, z0: Point, r: f64) -> FieldFunction {
    let mm = *m;
    let y = shifted_point(m, &z0, 10.0 * r);
    let base = m.dist(&y, &z0);
    FieldFunction::new("ramp", 3.0, move |p| 2.0 + ((mm.dist(&y, p) - base) / (20.0 * r)).tanh())
}

/// `((d/ρ)² + η²)^{-γ/2}`, a regularized pole of order `γ` at `z₀`.
pub fn pole(m: &ManifoldModel, z0: Point, rho: f64, gamma: f64, eta: f64) -> FieldFunction {
    let m = *m;
    FieldFunction::new("pole", eta.powf(-gamma), move |p| {
        let d = m.dist(&z0, p) / rho;
        (d * d + eta * eta).powf(-gamma / 2.0)
    })
}

/// Nonnegative family for the Harnack experiment.
pub fn harnack_family(m: &ManifoldModel, z0: Point, r: f64) -> Vec<FieldFunction> {
    vec![
        FieldFunction::constant(1.0),
        soft_paraboloid(m, z0, r),
        offset_bump(m, z0, r),
        tilted_profile(m, z0, r),
    ]
}

/// Family for the ABP experiment. The bowls saturate at `d ≈ 2.8R`, which
/// keeps `R^σ M⁻u` of order one for every `σ`.
pub fn abp_family(m: &ManifoldModel, z0: Point, r: f64) -> Vec<FieldFunction> {
    vec![bowl(m, z0, r, 0.25, 1.0), wavy_bowl(m, z0, r, 0.25, 1.0)]
}

/// Family for the Hölder experiment with the exponent each should show.
pub fn hoelder_family(m: &ManifoldModel, z0: Point, r: f64) -> Vec<(FieldFunction, f64)> {
    vec![(ramp(m, z0, r), 1.0), (root_cusp(m, z0, r, 1e-6), 0.5)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_and_shift() {
        assert_eq!(smooth_step(0.5), 1.0);
        assert_eq!(smooth_step(2.5), 0.0);
        assert!((smooth_step(1.5) - 0.5).abs() < 1e-12);
        let m = ManifoldModel::sphere(2, 1.0).unwrap();
        let o = m.origin();
        assert!((m.dist(&o, &shifted_point(&m, &o, 0.3)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn families_are_nonnegative() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let z0 = Point::from_slice(&[0.0, 0.0]);
        for (p, _) in m.sample_ball(&z0, 2.0, 500, &[]) {
            for u in harnack_family(&m, z0, 0.1) {
                assert!(u.eval(&p) >= 0.0);
                assert!(u.eval(&p) <= u.global_bound);
            }
        }
    }
}
