//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stderr so it shows in the test log.

use pucci_core::dyadic::DyadicDecomposition;
use pucci_core::envelope::convexity_defect;
use pucci_core::kernel::{anisotropic_family, KernelDensity, KernelParams};
use pucci_core::lab::{self, functions, ExperimentConfig, ExperimentReport};
use pucci_core::manifold::report::{gromov_ratios, gromov_violations};
use pucci_core::manifold::Profile;
use pucci_core::operator::{evaluate_linear, pucci_minus, pucci_plus, FieldFunction, OperatorValue, QuadratureConfig};
use pucci_core::{Coords, ManifoldModel, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

fn verdict(id: u32, name: &str, pass: bool, started: Instant, detail: &str) {
    let line = format!(
        "criterion {id:>2} {}: {name} ({:.1}s) {detail}\n",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    std::io::stderr().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))).unwrap()
}

fn with_sigmas(name: &str, sigmas: &[f64]) -> ExperimentConfig {
    let mut cfg = config(name);
    cfg.params.sigmas = sigmas.to_vec();
    cfg
}

fn failed(report: &ExperimentReport) -> Vec<String> {
    report.rows.iter().filter(|r| !r.pass).map(|r| format!("{}={:e}", r.check, r.value)).collect()
}

/// Runs `experiment` on each config and summarizes the failures.
fn experiment(experiment: &str, configs: &[(&str, ExperimentConfig)]) -> (bool, String, Vec<ExperimentReport>) {
    let mut pass = true;
    let mut detail = Vec::new();
    let mut reports = Vec::new();
    for (label, cfg) in configs {
        let report = lab::run(experiment, cfg, None).unwrap();
        let bad = failed(&report);
        pass &= bad.is_empty();
        detail.push(if bad.is_empty() { format!("{label}: {} checks ok", report.rows.len()) } else { format!("{label}: {bad:?}") });
        reports.push(report);
    }
    (pass, detail.join("; "), reports)
}

fn row(report: &ExperimentReport, check: &str) -> f64 {
    report.rows.iter().find(|r| r.check == check).unwrap_or_else(|| panic!("no row {check}")).value
}

#[test]
fn criterion_01_sigma_limit() {
    let t = Instant::now();
    let (pass, detail, reports) = experiment("sigma-limit", &[("euclid", config("euclid")), ("sphere", config("sphere"))]);
    let flat = row(&reports[0], "cutoff square: relative deviation sigma=1.99");
    let height = row(&reports[1], "height: relative deviation sigma=1.99");
    let pass = pass && flat <= 0.02 && height <= 0.05;
    verdict(1, "sigma -> 2 limit", pass && t.elapsed().as_secs() < 60, t, &format!("flat dev {flat:.2e}, sphere harmonic dev {height:.2e}; {detail}"));
}

#[test]
fn criterion_02_integrability() {
    let t = Instant::now();
    let sigmas = [0.5, 1.0, 1.5, 1.9, 1.99];
    let (pass, detail, _) = experiment("integrability", &[("euclid", with_sigmas("euclid", &sigmas)), ("sphere", with_sigmas("sphere", &sigmas))]);
    verdict(2, "integrability ratio", pass && t.elapsed().as_secs() < 120, t, &detail);
}

#[test]
fn criterion_03_distance_convexity() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let models = [
        (ManifoldModel::sphere(2, 1.0).unwrap(), 1.0, 0.5),
        (ManifoldModel::revolution(Profile::Paraboloid), 0.4, 0.25),
    ];
    for (m, spread, step) in models {
        let anchors = m.sample_ball(&m.origin(), spread, 100, &[0.3, 0.7]);
        for (y, _) in &anchors {
            let d2 = |p: &Point| m.dist(y, p).powi(2);
            for _ in 0..50 {
                let v = Coords::from_slice(&[rng.gen_range(-step..step), rng.gen_range(-step..step)]);
                let z = m.exp(y, &v);
                let xi = Coords::from_slice(&[rng.gen_range(-step..step), rng.gen_range(-step..step)]);
                let s = rng.gen_range(0.0..1.0);
                let defect = convexity_defect(&m, &d2, &z, &xi, s).unwrap();
                let top = s * (1.0 - s) * xi.norm_sq();
                worst = worst.max(-defect).max(defect - top);
                count += 1;
            }
        }
    }
    let mut eig_err: f64 = 0.0;
    for curvature in [1.0, 4.0] {
        let m = ManifoldModel::sphere(2, curvature).unwrap();
        let y = m.origin();
        for i in 1..=20 {
            let d = 1.4 / curvature.sqrt() * i as f64 / 20.0;
            let dir = Coords::from_slice(&[(i as f64).cos(), (i as f64).sin()]);
            let x = m.exp(&y, &(dir * d));
            let mut ev: Vec<f64> = m.dist_squared_hessian(&y, &x).unwrap().symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let a = curvature.sqrt() * d;
            eig_err = eig_err.max((ev[0] - a / a.tan()).abs()).max((ev[1] - 1.0).abs());
        }
    }
    let pass = count == 10_000 && worst <= 1e-6 && eig_err <= 1e-4;
    verdict(
        3,
        "distance-squared convexity and Hessian",
        pass && t.elapsed().as_secs() < 60,
        t,
        &format!("{count} samples, worst violation {worst:.2e}; Hessian eigenvalue error {eig_err:.2e}"),
    );
}

#[test]
fn criterion_04_volume_geometry() {
    let t = Instant::now();
    let (pass, mut detail, _) = experiment("geometry-report", &[("euclid", config("euclid")), ("sphere", config("sphere"))]);
    let mut gromov = 0;
    for k in [1.0, 4.0] {
        let m = ManifoldModel::sphere(2, k).unwrap();
        let radii: Vec<f64> = (1..=50).map(|i| 3.0 / k.sqrt() * i as f64 / 50.0).collect();
        gromov += gromov_violations(&gromov_ratios(&m, &m.origin(), &radii), 1e-9);
    }
    detail.push_str(&format!("; extra Gromov violations {gromov}"));
    verdict(4, "Gromov, VD, RVD, comparability", pass && gromov == 0 && t.elapsed().as_secs() < 60, t, &detail);
}

#[test]
fn criterion_05_dyadic_cubes() {
    let t = Instant::now();
    let sphere = ManifoldModel::sphere(2, 1.0).unwrap();
    let flat = ManifoldModel::euclidean(2).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, m, radius) in [("euclid", flat, 1.0), ("sphere", sphere, 0.6)] {
        let mut d = DyadicDecomposition::build(&m, &m.origin(), radius, 0.125, 0, 2).unwrap();
        let r = d.verify(100_000);
        let ok = r.samples == 100_000
            && r.nesting_violations == 0
            && r.uniqueness_violations == 0
            && r.separation_violations == 0
            && r.c1 > 0.0
            && 2.0 * r.c1 <= r.c2
            && r.coverage_defect <= r.sampling_error;
        pass &= ok;
        detail.push(format!(
            "{label}: c1 {:.3} c2 {:.3} nesting {} uniqueness {} coverage {:.1e} <= {:.1e}",
            r.c1, r.c2, r.nesting_violations, r.uniqueness_violations, r.coverage_defect, r.sampling_error
        ));
    }
    verdict(5, "dyadic cubes", pass && t.elapsed().as_secs() < 120, t, &detail.join("; "));
}

#[test]
fn criterion_06_barrier() {
    let t = Instant::now();
    let (pass, detail, _) = experiment("barrier-verify", &[("euclid", config("euclid")), ("sphere", config("sphere"))]);
    verdict(6, "barrier supersolution and bounds", pass && t.elapsed().as_secs() < 600, t, &detail);
}

fn within(a: &OperatorValue, b: f64, extra: f64) -> bool {
    (a.value - b).abs() <= a.error_bar + extra
}

#[test]
fn criterion_07_pucci_structure() {
    let t = Instant::now();
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let z0 = m.origin();
    let u = functions::bowl(&m, z0, 0.2, 0.5, 1.0).plus(&functions::offset_bump(&m, z0, 0.2));
    let w = functions::tilted_profile(&m, z0, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fails = Vec::new();
    for seed in 0..20u64 {
        let s = rng.gen_range(0.6..1.95);
        let x = m.exp(&z0, &Coords::from_slice(&[rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]));
        let p = KernelParams::new(0.5, 2.0, s, 0.5).unwrap();
        let cfg = QuadratureConfig::new(0.2);
        let plus = pucci_plus(&m, &p, &u, &x, &cfg).unwrap();
        let minus = pucci_minus(&m, &p, &u, &x, &cfg).unwrap();
        let l = evaluate_linear(&anisotropic_family(&m, p, seed), &u, &x, &cfg).unwrap();
        if !(minus.value - minus.error_bar <= l.value + l.error_bar && l.value - l.error_bar <= plus.value + plus.error_bar) {
            fails.push(format!("sandwich seed {seed}"));
        }
        let dual = pucci_plus(&m, &p, &u.scaled(-1.0), &x, &cfg).unwrap();
        if !within(&dual, -minus.value, minus.error_bar) {
            fails.push(format!("duality seed {seed}"));
        }
        let pw = pucci_plus(&m, &p, &w, &x, &cfg).unwrap();
        let sum = pucci_plus(&m, &p, &u.plus(&w), &x, &cfg).unwrap();
        if sum.value > plus.value + pw.value + sum.error_bar + plus.error_bar + pw.error_bar {
            fails.push(format!("sublinearity seed {seed}"));
        }
        let shifted = pucci_plus(&m, &p, &u.shifted(rng.gen_range(-5.0..5.0)), &x, &cfg).unwrap();
        if !within(&shifted, plus.value, plus.error_bar) {
            fails.push(format!("constant invariance seed {seed}"));
        }
        let flat = KernelParams::new(1.5, 1.5, s, 0.5).unwrap();
        let lin = evaluate_linear(&KernelDensity::constant(&m, flat, 1.5), &u, &x, &cfg).unwrap();
        let hi = pucci_plus(&m, &flat, &u, &x, &cfg).unwrap();
        let lo = pucci_minus(&m, &flat, &u, &x, &cfg).unwrap();
        if !(within(&hi, lin.value, lin.error_bar) && within(&lo, lin.value, lin.error_bar)) {
            fails.push(format!("lambda = Lambda seed {seed}"));
        }
    }
    let detail = if fails.is_empty() { "20 kernels, all structure checks within error bars".to_string() } else { format!("{fails:?}") };
    verdict(7, "Pucci structure", fails.is_empty() && t.elapsed().as_secs() < 180, t, &detail);
}

#[test]
fn criterion_08_abp() {
    let t = Instant::now();
    let sigmas = [1.0, 1.5, 1.9];
    let (pass, detail, reports) = experiment("abp", &[("euclid", with_sigmas("euclid", &sigmas)), ("sphere", with_sigmas("sphere", &sigmas))]);
    let spreads: Vec<String> = reports.iter().map(|r| format!("{:.2}", row(r, "bowl: C_emp variation"))).collect();
    verdict(8, "discrete ABP", pass && t.elapsed().as_secs() < 600, t, &format!("bowl C_emp variation {spreads:?}; {detail}"));
}

#[test]
fn criterion_09_harnack_hoelder_decay() {
    let t = Instant::now();
    let sigmas = [0.5, 1.0, 1.5, 1.9, 1.99];
    let configs = [("euclid", with_sigmas("euclid", &sigmas)), ("sphere", with_sigmas("sphere", &sigmas))];
    let (harnack, d1, hr) = experiment("harnack", &configs);
    let hoelder_configs = [("euclid", with_sigmas("euclid", &sigmas[1..])), ("sphere", with_sigmas("sphere", &sigmas[1..]))];
    let (hoelder, d2, _) = experiment("hoelder", &hoelder_configs);
    let (decay, d3, dr) = experiment("measure-decay", &[("euclid", config("euclid")), ("sphere", config("sphere"))]);
    let q: Vec<String> = hr.iter().map(|r| format!("{:.2}", row(r, "family max Q variation"))).collect();
    let eps: Vec<f64> = dr.iter().map(|r| row(r, "decay exponent eps")).collect();
    let pass = harnack && hoelder && decay && eps.iter().all(|e| *e > 0.0);
    verdict(
        9,
        "Harnack, Hoelder and measure decay robustness",
        pass && t.elapsed().as_secs() < 900,
        t,
        &format!("Q variation {q:?}, eps {eps:.3?}; harnack {d1}; hoelder {d2}; decay {d3}"),
    );
}

#[test]
fn criterion_10_reproducibility() {
    let t = Instant::now();
    let mut identical = true;
    for name in ["euclid", "sphere"] {
        let cfg = config(name);
        for e in ["integrability", "sigma-limit", "hoelder", "measure-decay"] {
            let a = lab::run(e, &cfg, None).unwrap();
            let b = lab::run(e, &cfg, None).unwrap();
            identical &= a.to_csv() == b.to_csv() && a.summary_json() == b.summary_json();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let models = [
        ManifoldModel::euclidean(2).unwrap(),
        ManifoldModel::sphere(2, 1.0).unwrap(),
        ManifoldModel::revolution(Profile::Paraboloid),
    ];
    let mut inconsistent = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let m = models[i % 3];
        let z0 = m.origin();
        let u: FieldFunction = functions::bowl(&m, z0, 0.2, 0.5, 1.0).plus(&functions::offset_bump(&m, z0, 0.2));
        let x = m.exp(&z0, &Coords::from_slice(&[rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15)]));
        let p = KernelParams::new(1.0, 2.0, rng.gen_range(0.6..1.95), 0.5).unwrap();
        let mut cfg = QuadratureConfig::new(0.2);
        let eval = |cfg: &QuadratureConfig| match i % 2 {
            0 => pucci_plus(&m, &p, &u, &x, cfg).unwrap(),
            _ => pucci_minus(&m, &p, &u, &x, cfg).unwrap(),
        };
        let a = eval(&cfg);
        cfg.ratio = 0.25;
        let b = eval(&cfg);
        let gap = (a.value - b.value).abs();
        worst = worst.max(gap / (a.error_bar + b.error_bar));
        if gap > a.error_bar + b.error_bar {
            inconsistent.push(format!("{m} sigma={:.3}: {} vs {}", p.sigma, a.value, b.value));
        }
    }
    let pass = identical && inconsistent.is_empty();
    verdict(
        10,
        "reproducibility and quadrature self-consistency",
        pass,
        t,
        &format!("identical reports {identical}; worst |q=1/2 - q=1/4| / error bars {worst:.3}; {inconsistent:?}"),
    );
}
