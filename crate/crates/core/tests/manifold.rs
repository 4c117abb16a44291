use pucci_core::manifold::report::{gromov_ratios, gromov_violations, rvd_constant, vd_exponent};
use pucci_core::manifold::{injectivity_near, Profile};
use pucci_core::{Coords, Error, ManifoldModel, Point};
use proptest::prelude::*;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

fn sphere2() -> ManifoldModel {
    ManifoldModel::sphere(2, 1.0).unwrap()
}

fn paraboloid() -> ManifoldModel {
    ManifoldModel::revolution(Profile::Paraboloid)
}

fn sphere_point(theta: f64, phi: f64) -> Point {
    Point::from_slice(&[theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn spec_strings_roundtrip() {
    for spec in ["euclid:n=2", "sphere:n=2,K=1.0", "sphere:n=3,K=0.25", "revolution:profile=paraboloid,n=2"] {
        let m: ManifoldModel = spec.parse().unwrap();
        let again: ManifoldModel = m.to_string().parse().unwrap();
        assert_eq!(m, again);
    }
    assert!("sphere:n=2".parse::<ManifoldModel>().is_err());
    assert!("euclid:n=2,K=1".parse::<ManifoldModel>().is_err());
    assert!("torus:n=2".parse::<ManifoldModel>().is_err());
    assert!("revolution:profile=cone,n=2".parse::<ManifoldModel>().is_err());
}

#[test]
fn euclidean_maps_are_affine() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let x = Point::from_slice(&[1.0, -2.0]);
    let z = Point::from_slice(&[0.5, 3.0]);
    let v = Coords::from_slice(&[0.3, 0.4]);
    assert_eq!(m.exp(&x, &v).coords, Coords::from_slice(&[1.3, -1.6]));
    assert_eq!(m.log(&x, &z).unwrap().comps, z.coords - x.coords);
    assert_eq!(m.reflect(&x, &z).unwrap().coords, Coords::from_slice(&[1.5, -7.0]));
    assert!((m.dist(&x, &z) - (0.25f64 + 25.0).sqrt()).abs() < 1e-15);
    assert_eq!(m.log(&x, &x).unwrap().norm(), 0.0);
    assert_eq!(m.reflect(&x, &x).unwrap(), x);
    assert!((m.ball_volume(&x, 2.0) - 4.0 * PI).abs() < 1e-12);
    assert_eq!(m.exp_jacobian(&x, 3.0, &v).unwrap(), 1.0);
    assert!(m.injectivity_radius(&x).is_infinite());
    assert_eq!(m.sectional_curvature_sup(&x, 1.0).value, 0.0);
}

#[test]
fn sphere_pole_to_equator() {
    let m = sphere2();
    let pole = m.origin();
    let v = Coords::from_slice(&[PI / 2.0, 0.0]);
    let z = m.exp(&pole, &v);
    assert!(z.coords[2].abs() < 1e-15);
    assert!((m.dist(&pole, &z) - PI / 2.0).abs() < 1e-14);
    let back = m.log(&pole, &z).unwrap();
    assert!((back.comps - v).norm() < 1e-14);
}

#[test]
fn sphere_antipode_is_cut_locus() {
    let m = sphere2();
    let pole = m.origin();
    let anti = Point::from_slice(&[0.0, 0.0, -1.0]);
    assert!(matches!(m.log(&pole, &anti), Err(Error::CutLocus { .. })));
    assert!(matches!(m.reflect(&pole, &anti), Err(Error::CutLocus { .. })));
    assert!((m.injectivity_radius(&pole) - PI).abs() < 1e-15);
    let s4 = ManifoldModel::sphere(2, 4.0).unwrap();
    assert!((s4.injectivity_radius(&pole) - PI / 2.0).abs() < 1e-15);
}

#[test]
fn sphere_reflection_continues_great_circle() {
    let m = sphere2();
    let pole = m.origin();
    for &(theta, phi) in &[(0.3, 0.0), (1.2, 2.0), (2.9, -1.0)] {
        let z = sphere_point(theta, phi);
        let r = m.reflect(&pole, &z).unwrap();
        let expected = sphere_point(theta, phi + PI);
        assert!((r.coords - expected.coords).norm() < 1e-14, "theta={theta}");
        let generic = m.exp(&pole, &(-m.log(&pole, &z).unwrap().comps));
        assert!((generic.coords - expected.coords).norm() < 1e-12);
    }
}

#[test]
fn sphere_cap_volume_matches_integrated_jacobian() {
    for k in [1.0, 2.5] {
        let m = ManifoldModel::sphere(2, k).unwrap();
        let x = m.origin();
        for r in [0.1, 0.7, 1.5] {
            let oracle = 2.0 * PI * simpson(|t| (k.sqrt() * t).sin() / k.sqrt(), 0.0, r, 2000);
            assert!((m.ball_volume(&x, r) - oracle).abs() < 1e-10 * oracle);
        }
        let m3 = ManifoldModel::sphere(3, k).unwrap();
        let x3 = m3.origin();
        for r in [0.2, 1.0] {
            let oracle = 4.0 * PI * simpson(|t| ((k.sqrt() * t).sin() / k.sqrt()).powi(2), 0.0, r, 2000);
            assert!((m3.ball_volume(&x3, r) - oracle).abs() < 1e-10 * oracle);
        }
    }
    let m = sphere2();
    assert!((m.ball_volume(&m.origin(), 1.0) - 2.0 * PI * (1.0 - 1f64.cos())).abs() < 1e-13);
}

#[test]
fn small_ball_ratio_tends_to_one() {
    for m in [sphere2(), ManifoldModel::sphere(3, 1.0).unwrap(), paraboloid()] {
        let x = if let ManifoldModel::Revolution { .. } = m {
            Point::from_slice(&[0.2, 0.1])
        } else {
            m.origin()
        };
        let r: f64 = 1e-3;
        let ratio = m.ball_volume(&x, r) / (pucci_core::numeric::unit_ball_volume(m.dim()) * r.powi(m.dim() as i32));
        assert!((ratio - 1.0).abs() < 1e-4, "{m}: {ratio}");
    }
}

#[test]
fn sphere_jacobian_is_sine_ratio() {
    let m = ManifoldModel::sphere(3, 2.0).unwrap();
    let x = m.origin();
    let v = Coords::from_slice(&[0.0, 1.0, 0.0]);
    let t = 0.8;
    let s = 2f64.sqrt() * t;
    let expected = (s.sin() / s).powi(2);
    assert!((m.exp_jacobian(&x, t, &v).unwrap() - expected).abs() < 1e-15);
    assert_eq!(m.exp_jacobian(&x, 0.0, &v).unwrap(), 1.0);
}

#[test]
fn sphere_hessian_of_half_squared_distance() {
    let m = sphere2();
    let y = m.origin();
    let d = PI / 4.0;
    let x = sphere_point(d, 0.7);
    let h = m.dist_squared_hessian(&y, &x).unwrap();
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert!((ev[0] - d * (1.0 / d.tan())).abs() < 1e-4, "{ev:?}");
    assert!((ev[1] - 1.0).abs() < 1e-4, "{ev:?}");

    let e = ManifoldModel::euclidean(3).unwrap();
    let he = e.dist_squared_hessian(&Point::from_slice(&[0.0, 0.0, 0.0]), &Point::from_slice(&[0.4, -0.1, 0.2])).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((he[(i, j)] - target).abs() < 1e-6);
        }
    }
    let hs = m.dist_squared_hessian(&y, &y).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((hs[(i, j)] - target).abs() < 1e-6);
        }
    }
    assert!(m.dist_squared_hessian(&y, &sphere_point(1.7, 0.0)).is_err());
}

#[test]
fn paraboloid_curvature_closed_form() {
    let m = paraboloid();
    for s in [0.0, 0.1, 0.5, 1.3] {
        let p = Point::from_slice(&[s * 0.6, s * 0.8]);
        let closed = 4.0 / (1.0 + 4.0 * s * s).powi(2);
        assert!((m.curvature_at(&p) - closed).abs() < 1e-9);
    }
    let sup = m.sectional_curvature_sup(&m.origin(), 0.5);
    assert!((sup.value - 4.0).abs() < 1e-9);
    let off = Point::from_slice(&[1.0, 0.0]);
    let sup_off = m.sectional_curvature_sup(&off, 0.4);
    let closed = 4.0 / (1.0 + 4.0 * 0.36f64).powi(2);
    assert!(sup_off.value <= closed + 1e-12);
    assert!(closed - sup_off.value < 0.5 * sup_off.resolution * 8.0);
}

/// Independent geodesic integrator for the embedded surface `F = h(ρ) - z = 0`,
/// `X'' = -(X'ᵀ D²F X') ∇F / |∇F|²`, run with half the library step.
fn embedded_geodesic(p: [f64; 2], chart_vel: [f64; 2], length: f64, step: f64) -> [f64; 2] {
    let rhs = |s: &[f64; 6]| -> [f64; 6] {
        let (x, y) = (s[0], s[1]);
        let grad = [2.0 * x, 2.0 * y, -1.0];
        let quad = 2.0 * (s[3] * s[3] + s[4] * s[4]);
        let g2 = grad[0] * grad[0] + grad[1] * grad[1] + 1.0;
        let c = quad / g2;
        [s[3], s[4], s[5], -c * grad[0], -c * grad[1], -c * grad[2]]
    };
    let vz = 2.0 * p[0] * chart_vel[0] + 2.0 * p[1] * chart_vel[1];
    let mut s = [p[0], p[1], p[0] * p[0] + p[1] * p[1], chart_vel[0], chart_vel[1], vz];
    let n = (length / step).ceil() as usize;
    let h = length / n as f64;
    for _ in 0..n {
        let k1 = rhs(&s);
        let mut t = s;
        for i in 0..6 {
            t[i] = s[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(&t);
        for i in 0..6 {
            t[i] = s[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(&t);
        for i in 0..6 {
            t[i] = s[i] + h * k3[i];
        }
        let k4 = rhs(&t);
        for i in 0..6 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    [s[0], s[1]]
}

#[test]
fn paraboloid_exp_matches_half_step_embedded_oracle() {
    let m = paraboloid();
    let cases = [([0.0, 0.0], [0.6, 0.2]), ([0.3, -0.2], [-0.4, 0.5]), ([0.5, 0.4], [0.1, -0.6])];
    for (p, v) in cases {
        let x = Point::from_slice(&p);
        let comps = Coords::from_slice(&v);
        let z = m.exp(&x, &comps);
        let frame = m.frame(&x);
        let len = comps.norm();
        let unit = [
            (frame[0][0] * v[0] + frame[1][0] * v[1]) / len,
            (frame[0][1] * v[0] + frame[1][1] * v[1]) / len,
        ];
        let oracle = embedded_geodesic(p, unit, len, 1.0e-3);
        assert!((z.coords[0] - oracle[0]).abs() < 1e-8 && (z.coords[1] - oracle[1]).abs() < 1e-8);
        let back = m.log(&x, &z).unwrap();
        assert!((back.comps - comps).norm() < 1e-8);
    }
}

fn lift(p: [f64; 2]) -> [f64; 3] {
    [p[0], p[1], p[0] * p[0] + p[1] * p[1]]
}

fn len3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Shortest path on a 16-neighbour chart mesh, then polyline relaxation of the
/// lifted path with successive refinement.
fn mesh_distance_oracle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let h = 0.02;
    let lo = [a[0].min(b[0]) - 0.3, a[1].min(b[1]) - 0.3];
    let nx = (((a[0].max(b[0]) + 0.3) - lo[0]) / h).ceil() as i64 + 1;
    let ny = (((a[1].max(b[1]) + 0.3) - lo[1]) / h).ceil() as i64 + 1;
    let node = |i: i64, j: i64| [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
    let idx = |p: [f64; 2]| (((p[0] - lo[0]) / h).round() as i64, ((p[1] - lo[1]) / h).round() as i64);
    let (si, sj) = idx(a);
    let (ti, tj) = idx(b);
    let mut dist = vec![f64::INFINITY; (nx * ny) as usize];
    let mut prev = vec![usize::MAX; (nx * ny) as usize];
    let mut heap = BinaryHeap::new();
    let key = |i: i64, j: i64| (i * ny + j) as usize;
    dist[key(si, sj)] = 0.0;
    heap.push((std::cmp::Reverse(0u64), si, sj));
    let offs = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1), (1, 2), (2, 1), (-1, 2), (-2, 1), (1, -2), (2, -1), (-1, -2), (-2, -1)];
    while let Some((std::cmp::Reverse(dk), i, j)) = heap.pop() {
        let d = f64::from_bits(dk);
        if d > dist[key(i, j)] {
            continue;
        }
        if (i, j) == (ti, tj) {
            break;
        }
        for (di, dj) in offs {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                continue;
            }
            let nd = d + len3(lift(node(i, j)), lift(node(ni, nj)));
            if nd < dist[key(ni, nj)] {
                dist[key(ni, nj)] = nd;
                prev[key(ni, nj)] = key(i, j);
                heap.push((std::cmp::Reverse(nd.to_bits()), ni, nj));
            }
        }
    }
    let mut path = vec![];
    let mut k = key(ti, tj);
    while k != usize::MAX {
        path.push(node(k as i64 / ny, k as i64 % ny));
        k = prev[k];
    }
    path.reverse();
    path[0] = a;
    *path.last_mut().unwrap() = b;

    let resample = |path: &[[f64; 2]], n: usize| -> Vec<[f64; 2]> {
        let mut cum = vec![0.0];
        for w in path.windows(2) {
            cum.push(cum.last().unwrap() + len3(lift(w[0]), lift(w[1])));
        }
        let total = *cum.last().unwrap();
        (0..=n)
            .map(|s| {
                let target = total * s as f64 / n as f64;
                let i = cum.iter().rposition(|&c| c <= target).unwrap().min(path.len() - 2);
                let f = ((target - cum[i]) / (cum[i + 1] - cum[i]).max(1e-300)).clamp(0.0, 1.0);
                [path[i][0] + f * (path[i + 1][0] - path[i][0]), path[i][1] + f * (path[i + 1][1] - path[i][1])]
            })
            .collect()
    };
    let mut poly = resample(&path, 8);
    for n in [8, 16, 32, 64, 128] {
        poly = resample(&poly, n);
        for _ in 0..4000 {
            for i in 1..n {
                let p = poly[i];
                let l = lift(p);
                let (pa, pb) = (lift(poly[i - 1]), lift(poly[i + 1]));
                let ua = len3(l, pa).max(1e-300);
                let ub = len3(l, pb).max(1e-300);
                let g3: Vec<f64> = (0..3).map(|c| (l[c] - pa[c]) / ua + (l[c] - pb[c]) / ub).collect();
                let gx = g3[0] + g3[2] * 2.0 * p[0];
                let gy = g3[1] + g3[2] * 2.0 * p[1];
                let metric = 1.0 + 4.0 * (p[0] * p[0] + p[1] * p[1]);
                let eta = 0.25 * ua.min(ub) / metric;
                poly[i] = [p[0] - eta * gx, p[1] - eta * gy];
            }
        }
    }
    poly.windows(2).map(|w| len3(lift(w[0]), lift(w[1]))).sum()
}

#[test]
fn paraboloid_distance_matches_mesh_oracle() {
    let m = paraboloid();
    for (a, b) in [([-0.3, 0.1], [0.4, 0.2]), ([0.1, -0.4], [0.2, 0.5]), ([0.0, 0.0], [0.5, 0.3])] {
        let d = m.dist(&Point::from_slice(&a), &Point::from_slice(&b));
        let oracle = mesh_distance_oracle(a, b);
        assert!((d - oracle).abs() < 1e-3 * oracle, "{d} vs {oracle}");
    }
}

#[test]
fn paraboloid_jacobian_sandwich_and_area_oracle() {
    let m = paraboloid();
    let k = 4.0f64;
    let x = Point::from_slice(&[0.2, -0.1]);
    for (i, t) in [0.1, 0.3, 0.6, 0.9].iter().enumerate() {
        for th in [0.0, 1.0, 2.5, 4.0] {
            let v = Coords::from_slice(&[f64::cos(th + i as f64), f64::sin(th + i as f64)]);
            let j = m.exp_jacobian(&x, *t, &v).unwrap();
            let lower = ((k.sqrt() * t).sin() / (k.sqrt() * t)).max(0.0);
            assert!(lower - 1e-9 <= j && j <= 1.0 + 1e-9, "t={t} J={j}");

            // |∂θ exp(t v(θ))|_g / t, measured through the embedding.
            let e = 1e-5;
            let rot = |a: f64| Coords::from_slice(&[v[0] * a.cos() - v[1] * a.sin(), v[0] * a.sin() + v[1] * a.cos()]);
            let zp = m.exp(&x, &(rot(e) * *t));
            let zm = m.exp(&x, &(rot(-e) * *t));
            let speed = len3(lift([zp.coords[0], zp.coords[1]]), lift([zm.coords[0], zm.coords[1]])) / (2.0 * e);
            assert!((speed / t - j).abs() < 1e-6, "t={t} oracle={} J={j}", speed / t);
        }
    }
}

#[test]
fn injectivity_lower_bound_propagation() {
    let r = 0.05;
    let b = injectivity_near(15.5 * r, 1.0, 4.9 * r);
    assert!(b > 5.0 * r, "{b}");
    let m = paraboloid();
    assert!(m.injectivity_radius(&m.origin()).is_infinite());
    let x = Point::from_slice(&[0.1, 0.0]);
    let inj = m.injectivity_radius(&x);
    assert!(inj > 1.3 && inj < PI / 2.0);
    assert!((m.conjugate_radius(&x) - PI / 2.0).abs() < 1e-15);
}

#[test]
fn gromov_vd_rvd_on_grids() {
    let radii: Vec<f64> = (1..=50).map(|i| 0.06 * i as f64).collect();
    for (m, x) in [
        (ManifoldModel::euclidean(2).unwrap(), Point::from_slice(&[0.0, 0.0])),
        (sphere2(), sphere2().origin()),
        (ManifoldModel::sphere(3, 1.0).unwrap(), ManifoldModel::sphere(3, 1.0).unwrap().origin()),
    ] {
        let table = gromov_ratios(&m, &x, &radii);
        assert_eq!(gromov_violations(&table, 1e-12), 0, "{m}");
        assert!(vd_exponent(&m, &x, &radii) <= m.dim() as f64 + 1e-9);
        let a1 = rvd_constant(&m, &x, &radii);
        assert!(a1 > 0.0 && a1 <= 1.0);
    }
}

fn arb_sphere_point() -> impl Strategy<Value = Point> {
    (0.0..PI, -PI..PI).prop_map(|(t, p)| sphere_point(t, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sphere_log_exp_roundtrip(x in arb_sphere_point(), a in -2.5f64..2.5, b in -2.5f64..2.5) {
        let m = sphere2();
        let v = Coords::from_slice(&[a, b]);
        prop_assume!(v.norm() < PI - 1e-3);
        let z = m.exp(&x, &v);
        prop_assert!(m.contains(&z));
        let back = m.log(&x, &z).unwrap();
        prop_assert!((back.comps - v).norm() < 1e-9);
        prop_assert!((m.dist(&x, &z) - v.norm()).abs() < 1e-12);
    }

    #[test]
    fn sphere_reflection_is_isometric_involution(x in arb_sphere_point(), z in arb_sphere_point()) {
        let m = sphere2();
        prop_assume!(m.dist(&x, &z) < PI - 1e-3);
        let r = m.reflect(&x, &z).unwrap();
        prop_assert!((m.dist(&x, &r) - m.dist(&x, &z)).abs() < 1e-12);
        let rr = m.reflect(&x, &r).unwrap();
        prop_assert!((rr.coords - z.coords).norm() < 1e-12);
    }

    #[test]
    fn distance_is_a_metric(x in arb_sphere_point(), y in arb_sphere_point(), z in arb_sphere_point()) {
        let m = sphere2();
        prop_assert!((m.dist(&x, &y) - m.dist(&y, &x)).abs() < 1e-14);
        prop_assert!(m.dist(&x, &z) <= m.dist(&x, &y) + m.dist(&y, &z) + 1e-12);
        prop_assert_eq!(m.dist(&x, &x), 0.0);
    }

    #[test]
    fn exp_is_nonexpanding(x in arb_sphere_point(), a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0) {
        let m = sphere2();
        let v1 = Coords::from_slice(&[a, b]);
        let v2 = Coords::from_slice(&[c, d]);
        let lhs = m.dist(&m.exp(&x, &v1), &m.exp(&x, &v2));
        prop_assert!(lhs <= (v1 - v2).norm() + 1e-12);
    }

    #[test]
    fn paraboloid_exp_is_nonexpanding(a in -0.3f64..0.3, b in -0.3f64..0.3, v in prop::array::uniform4(-0.5f64..0.5)) {
        let m = paraboloid();
        let x = Point::from_slice(&[a, b]);
        let v1 = Coords::from_slice(&v[..2]);
        let v2 = Coords::from_slice(&v[2..]);
        let lhs = m.dist(&m.exp(&x, &v1), &m.exp(&x, &v2));
        prop_assert!(lhs <= (v1 - v2).norm() + 1e-9);
    }

    #[test]
    fn toponogov_upper_bound(theta in 0.05f64..1.2, phi in -PI..PI, a in -0.6f64..0.6, b in -0.6f64..0.6) {
        let m = sphere2();
        let x = m.origin();
        let z0 = sphere_point(theta, phi);
        let e = m.log(&x, &z0).unwrap().comps;
        let xi = Coords::from_slice(&[a, b]);
        let lhs = m.dist(&z0, &m.exp(&x, &xi));
        prop_assert!(lhs <= (e - xi).norm() + 1e-12);
    }

    #[test]
    fn gromov_ratio_never_exceeds_one(theta in 0.0f64..PI, r in 1e-3f64..3.0) {
        let m = sphere2();
        let x = sphere_point(theta, 0.3);
        prop_assert!(m.ball_volume(&x, r) <= PI * r * r * (1.0 + 1e-12));
        prop_assert!(m.ball_volume(&x, r * 1.01) > m.ball_volume(&x, r) || r * 1.01 > PI);
    }

    #[test]
    fn midpoint_convexity_sphere(y in arb_sphere_point(), s in prop::array::uniform4(-1.0f64..1.0), t in 0.01f64..0.99) {
        let m = sphere2();
        let rho = 0.99 * PI / 2.0;
        let w = Coords::from_slice(&[s[0], s[1]]) * (0.6 * rho / 2f64.sqrt());
        let x = m.exp(&y, &w);
        let xi = Coords::from_slice(&[s[2], s[3]]) * (0.3 * rho / 2f64.sqrt());
        let d2 = |p: &Point| m.dist(&y, p).powi(2);
        let q = (1.0 - t) * d2(&m.exp(&x, &(xi * t))) + t * d2(&m.exp(&x, &(xi * -(1.0 - t)))) - d2(&x);
        prop_assert!(q >= -1e-9);
        prop_assert!(q <= t * (1.0 - t) * xi.norm_sq() + 1e-9);
    }
}
