use pucci_core::kernel::{anisotropic_family, KernelDensity, KernelParams};
use pucci_core::manifold::Profile;
use pucci_core::operator::*;
use pucci_core::{ManifoldModel, Point};
use proptest::prelude::*;

fn smooth_step(r: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = psi(2.0 - r);
    a / (a + psi(r - 1.0))
}

fn cutoff_square() -> FieldFunction {
    FieldFunction::new("|y|^2 cutoff", 4.0, |p| {
        let r2 = p.coords.norm_sq();
        r2 * smooth_step(r2.sqrt())
    })
}

fn height() -> FieldFunction {
    FieldFunction::new("z", 1.0, |p| p.coords[p.coords.len() - 1])
}

fn params(l: f64, big: f64, s: f64) -> KernelParams {
    KernelParams::new(l, big, s, 0.5).unwrap()
}

#[test]
fn sigma_to_two_flat_square() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let x = Point::from_slice(&[0.0, 0.0]);
    let rows = sigma2_limit_check(&m, &cutoff_square(), &x, 4.0, &[1.5, 1.9, 1.99], &QuadratureConfig::new(0.5)).unwrap();
    let last = rows.last().unwrap();
    assert!(last.relative_deviation < 0.02, "{rows:?}");
    assert!(rows[0].relative_deviation > last.relative_deviation);
}

#[test]
fn sigma_to_two_flat_harmonic() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let x = Point::from_slice(&[0.0, 0.0]);
    let u = FieldFunction::new("xy cutoff", 4.0, |p| {
        let c = &p.coords;
        c[0] * c[1] * smooth_step(c.norm())
    });
    let rows = sigma2_limit_check(&m, &u, &x, 0.0, &[1.0, 1.99], &QuadratureConfig::new(0.5)).unwrap();
    for r in rows {
        assert!(r.value.abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn sigma_to_two_sphere_harmonic() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let x = m.origin();
    let rows = sigma2_limit_check(&m, &height(), &x, -2.0, &[1.9, 1.99], &QuadratureConfig::new(0.5)).unwrap();
    assert!(rows[1].relative_deviation < 0.05, "{rows:?}");
}

#[test]
fn flat_antisymmetric_part_vanishes() {
    let m = ManifoldModel::euclidean(3).unwrap();
    let u = FieldFunction::new("cubic", 10.0, |p| p.coords[0].powi(3) + p.coords[1]);
    let v = pucci_plus(&m, &params(1.0, 2.0, 1.4), &u, &Point::from_slice(&[0.1, 0.0, 0.2]), &QuadratureConfig::new(0.3)).unwrap();
    assert_eq!(v.i2, 0.0);
}

#[test]
fn antisymmetric_bound_on_paraboloid() {
    let m = ManifoldModel::revolution(Profile::Paraboloid);
    let x = Point::from_slice(&[0.15, 0.05]);
    let u = FieldFunction::new("x1", 2.0, |p| (p.coords[0] * 2.0).tanh());
    let k = m.sectional_curvature_sup(&x, m.injectivity_radius(&x)).value;
    for s in [0.8, 1.5] {
        let p = params(1.0, 2.0, s);
        let r = 0.2;
        let v = pucci_plus(&m, &p, &u, &x, &QuadratureConfig::new(r)).unwrap();
        let bound = 2.0 * antisymmetric_coefficient(2) * p.big_lambda * u.global_bound * k * r.powf(2.0 - s);
        assert!(v.i2.abs() <= bound, "{} > {bound}", v.i2);
        assert!(v.i2 != 0.0);
    }
}

#[test]
fn sphere_antisymmetric_part_vanishes() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let x = m.exp(&m.origin(), &pucci_core::Coords::from_slice(&[0.3, 0.1]));
    let v = pucci_plus(&m, &params(1.0, 2.0, 1.2), &height(), &x, &QuadratureConfig::new(0.4)).unwrap();
    assert!(v.i2.abs() < 1e-12);
}

#[test]
fn integrability_uniform_in_sigma() {
    let flat = ManifoldModel::euclidean(2).unwrap();
    let sphere = ManifoldModel::sphere(2, 1.0).unwrap();
    let r = 0.1;
    let cap = 2f64.powi(3);
    for s in [0.5, 1.0, 1.5, 1.9, 1.99] {
        let p = params(1.0, 1.0, s);
        let cfg = QuadratureConfig::new(r);
        let e = integrability_constant(&flat, &Point::from_slice(&[0.0, 0.0]), r, &p, &cfg).unwrap();
        let closed = 2.0 * (1.0 + (2.0 - s) / s);
        assert!((e - closed).abs() < 1e-3 * closed);
        let c = integrability_constant(&sphere, &sphere.origin(), r, &p, &cfg).unwrap();
        assert!(c <= cap * 2.0 * (1.0 + (2.0 - 0.5) / 0.5));
        assert!(c / e < 4.0 && e / c < 4.0, "σ={s}: sphere {c} flat {e}");
    }
}

#[test]
fn well_definedness_bound_holds() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let x = m.origin();
    let u = FieldFunction::new("mix", 1.5, |p| p.coords[0] * p.coords[1] + 0.5 * p.coords[2]);
    for seed in 0..3 {
        for s in [0.7, 1.9] {
            let p = params(0.5, 2.0, s);
            let nu = anisotropic_family(&m, p, seed);
            let r = 0.3;
            let v = evaluate_linear(&nu, &u, &x, &QuadratureConfig::new(r)).unwrap();
            let pn = primed_norm(&m, &u, &x, r, 64);
            let bound = well_definedness_constant(2, 0.5) * p.big_lambda * (pn.value + u.global_bound) * r.powf(-s);
            assert!(v.value.abs() <= bound);
        }
    }
}

#[test]
fn primed_norm_of_quadratic() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let u = FieldFunction::new("q", 10.0, |p| p.coords[0] * p.coords[0] - 0.5 * p.coords[1] * p.coords[1]);
    let pn = primed_norm(&m, &u, &Point::from_slice(&[0.0, 0.0]), 1.0, 200);
    assert!((pn.hess - 2.0).abs() < 1e-5);
    assert!(pn.grad <= 2.0 + 1e-6 && pn.grad > 1.8);
    assert!(pn.sup <= 1.0 + 1e-12);
}

#[test]
fn degenerate_class_collapses() {
    let m = ManifoldModel::sphere(3, 1.0).unwrap();
    let p = params(1.5, 1.5, 1.3);
    let x = m.origin();
    let u = FieldFunction::new("w", 1.0, |p| p.coords[0] * p.coords[3] + 0.3 * p.coords[1]);
    let cfg = QuadratureConfig::new(0.4);
    let l = evaluate_linear(&KernelDensity::constant(&m, p, 1.5), &u, &x, &cfg).unwrap();
    let plus = pucci_plus(&m, &p, &u, &x, &cfg).unwrap();
    let minus = pucci_minus(&m, &p, &u, &x, &cfg).unwrap();
    assert!((plus.value - l.value).abs() <= l.error_bar);
    assert!((minus.value - l.value).abs() <= l.error_bar);
}

#[test]
fn sandwich_for_random_kernels() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let u = cutoff_square().plus(&FieldFunction::new("wave", 1.0, |p| (3.0 * p.coords[0]).sin() * smooth_step(p.coords.norm())));
    let cfg = QuadratureConfig::new(0.4);
    let x = Point::from_slice(&[0.2, -0.1]);
    let p = params(1.0, 3.0, 1.6);
    let plus = pucci_plus(&m, &p, &u, &x, &cfg).unwrap();
    let minus = pucci_minus(&m, &p, &u, &x, &cfg).unwrap();
    for seed in 0..6 {
        let l = evaluate_linear(&anisotropic_family(&m, p, seed), &u, &x, &cfg).unwrap();
        assert!(minus.value - minus.error_bar <= l.value && l.value <= plus.value + plus.error_bar);
    }
}

#[test]
fn halving_grading_ratio_is_within_error_bars() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let x = m.exp(&m.origin(), &pucci_core::Coords::from_slice(&[0.2, -0.4]));
    let u = FieldFunction::new("mix", 1.5, |p| p.coords[0] * p.coords[1] + 0.5 * p.coords[2]);
    let p = params(1.0, 2.0, 1.75);
    let mut cfg = QuadratureConfig::new(0.5);
    let a = pucci_plus(&m, &p, &u, &x, &cfg).unwrap();
    cfg.ratio = 0.25;
    let b = pucci_plus(&m, &p, &u, &x, &cfg).unwrap();
    assert!((a.value - b.value).abs() <= a.error_bar + b.error_bar, "{a:?} {b:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extremal_structure(x0 in -0.3f64..0.3, x1 in -0.3f64..0.3, s in 0.6f64..1.95, c in -5.0f64..5.0, t in 0.1f64..4.0, a in -2.0f64..2.0) {
        let m = ManifoldModel::euclidean(2).unwrap();
        let x = Point::from_slice(&[x0, x1]);
        let p = params(0.7, 2.0, s);
        let cfg = QuadratureConfig::new(0.4);
        let u = cutoff_square();
        let w = FieldFunction::new("lin", 2.0, move |p| a * p.coords[0] * smooth_step(p.coords.norm()));
        let plus = pucci_plus(&m, &p, &u, &x, &cfg).unwrap();
        let minus = pucci_minus(&m, &p, &u, &x, &cfg).unwrap();
        let dual = pucci_plus(&m, &p, &u.scaled(-1.0), &x, &cfg).unwrap();
        prop_assert!((dual.value + minus.value).abs() <= dual.error_bar + minus.error_bar);
        let shifted = pucci_plus(&m, &p, &u.shifted(c), &x, &cfg).unwrap();
        prop_assert!((shifted.value - plus.value).abs() <= 1e-9 * (1.0 + plus.value.abs()));
        let scaled = pucci_plus(&m, &p, &u.scaled(t), &x, &cfg).unwrap();
        prop_assert!((scaled.value - t * plus.value).abs() <= scaled.error_bar + t * plus.error_bar);
        let pw = pucci_plus(&m, &p, &w, &x, &cfg).unwrap();
        let sum = pucci_plus(&m, &p, &u.plus(&w), &x, &cfg).unwrap();
        prop_assert!(sum.value <= plus.value + pw.value + sum.error_bar + plus.error_bar + pw.error_bar);
        let mw = pucci_minus(&m, &p, &w, &x, &cfg).unwrap();
        let msum = pucci_minus(&m, &p, &u.plus(&w), &x, &cfg).unwrap();
        prop_assert!(msum.value >= minus.value + mw.value - msum.error_bar - minus.error_bar - mw.error_bar);
        prop_assert!(minus.value <= plus.value);
    }
}
