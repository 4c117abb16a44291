use super::config::ExperimentConfig;
use super::functions;
use super::report::{ExperimentReport, Row, ThresholdSource};
use crate::barrier::{self, BarrierKind, BarrierSpec, Plateau};
use crate::dyadic::{DyadicDecomposition, DyadicReport};
use crate::envelope::{self, AbpConfig, AbpConstants, RingConfig};
use crate::error::{Error, Result};
use crate::kernel::{KernelDensity, KernelParams, KernelSpec};
use crate::manifold::report::{comparability_constant, gromov_ratios, gromov_violations, rvd_constant, vd_exponent};
use crate::manifold::{ManifoldModel, Point};
use crate::operator::{self, FieldFunction, QuadratureConfig, TailPolicy};
use rayon::prelude::*;
use ThresholdSource::{Configured, Theory};

pub const EXPERIMENTS: [&str; 8] = [
    "geometry-report",
    "integrability",
    "barrier-verify",
    "abp",
    "sigma-limit",
    "harnack",
    "hoelder",
    "measure-decay",
];

/// Runs one named experiment; `seed` overrides `seeds.base` when given.
pub fn run(name: &str, cfg: &ExperimentConfig, seed: Option<u64>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ctx = Ctx {
        cfg,
        m: cfg.manifold,
        z0: cfg.center()?,
        r: cfg.geometry.radius,
        seed: seed.unwrap_or(cfg.seeds.base),
    };
    let rows = match name {
        "geometry-report" => geometry(&ctx),
        "integrability" => integrability(&ctx),
        "barrier-verify" => barrier_verify(&ctx),
        "abp" => abp(&ctx),
        "sigma-limit" => sigma_limit(&ctx),
        "harnack" => harnack(&ctx),
        "hoelder" => hoelder(&ctx),
        "measure-decay" => measure_decay(&ctx),
        other => Err(Error::Config(format!("unknown experiment `{other}`"))),
    }?;
    Ok(ExperimentReport {
        experiment: name.to_string(),
        config_hash: cfg.hash(),
        seed: ctx.seed,
        environment: Default::default(),
        rows,
    })
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    m: ManifoldModel,
    z0: Point,
    r: f64,
    seed: u64,
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.m.dim()
    }

    fn params(&self, sigma: f64) -> Result<KernelParams> {
        self.cfg.params_at(sigma)
    }

    fn quad(&self, split: f64) -> QuadratureConfig {
        self.cfg.quadrature.config(split)
    }

    /// Quadrature whose far field is integrated out to `10⁻³ Λ R^{-σ}`.
    fn quad_extended(&self, split: f64, params: &KernelParams) -> QuadratureConfig {
        QuadratureConfig {
            tail_policy: TailPolicy::Extend,
            tail_tolerance: Some(1e-3 * params.big_lambda * self.r.powf(-params.sigma)),
            ..self.quad(split)
        }
    }

    /// Halton shift derived from the seed.
    fn shift(&self, salt: u64) -> [f64; 3] {
        let mut s = self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        [next(), next(), next()]
    }

    fn ball(&self, radius: f64, count: usize, salt: u64) -> Vec<(Point, f64)> {
        self.m.sample_ball(&self.z0, radius, count, &self.shift(salt))
    }

    fn cubes(&self, radius: f64, j_max: i32) -> Result<(DyadicDecomposition, DyadicReport)> {
        let mut d = DyadicDecomposition::build(&self.m, &self.z0, radius, self.cfg.params.delta0, 0, j_max)?;
        let rep = d.verify(self.cfg.budgets.cube_samples);
        Ok((d, rep))
    }

    fn a1(&self) -> f64 {
        let radii: Vec<f64> = (1..=50).map(|i| 15.0 * self.r * i as f64 / 50.0).collect();
        rvd_constant(&self.m, &self.z0, &radii)
    }
}

/// `C₀ = max(sup(M⁻u)₊, sup(-M⁺u)₊)` over a grid of `B_{2R}`, each with
/// its error bar added.
fn c0_constant(ctx: &Ctx, u: &FieldFunction, params: &KernelParams) -> Result<(f64, f64)> {
    let grid = ctx.ball(2.0 * ctx.r, ctx.cfg.budgets.ball_grid, 1);
    let q = ctx.quad_extended(ctx.r / 2.0, params);
    let rows: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|(x, _)| {
            let lo = operator::pucci_minus(&ctx.m, params, u, x, &q)?;
            let hi = operator::pucci_plus(&ctx.m, params, u, x, &q)?;
            let e = lo.error_bar.max(hi.error_bar);
            Ok((lo.value.max(-hi.value), e, lo.value.max(-hi.value) + e))
        })
        .collect::<Result<_>>()?;
    let (v, e, _) = rows.into_iter().fold((0.0, 0.0, 0.0), |acc, r| if r.2 > acc.2 { r } else { acc });
    Ok((v.max(0.0), e))
}

fn geometry(ctx: &Ctx) -> Result<Vec<Row>> {
    let (m, z0, r) = (&ctx.m, &ctx.z0, ctx.r);
    let n = ctx.n() as f64;
    let radii: Vec<f64> = (1..=50).map(|i| 15.0 * r * i as f64 / 50.0).collect();
    let mut centers = vec![*z0];
    for (k, e) in m.frame(z0).into_iter().enumerate() {
        centers.push(m.exp(z0, &(e * ((k + 1) as f64 * r))));
    }
    let table = gromov_ratios(m, z0, &radii);
    let a1 = rvd_constant(m, z0, &radii);
    let a2 = comparability_constant(m, &centers, &radii);
    let k_max = m.sectional_curvature_sup(z0, 15.0 * r).value;
    Ok(vec![
        Row::measured("injectivity radius", "injectivity radius at z0", m.injectivity_radius(z0), 0.0),
        Row::at_least("curvature sup", "nonnegative sectional curvature", k_max, 0.0, 0.0, Theory),
        Row::at_most(
            "gromov violations",
            "Bishop-Gromov monotonicity of mu(B_r)/|B_r|",
            gromov_violations(&table, 1e-9) as f64,
            0.0,
            0.0,
            Theory,
        ),
        Row::at_most("vd exponent", "volume doubling exponent", vd_exponent(m, z0, &radii), 0.0, n + 0.01, Theory),
        Row::new("rvd a1", "reverse volume doubling constant", a1, 1.0, 0.0, a1 > 0.0 && a1 <= 1.0 + 1e-12, Theory),
        Row::at_least("comparability a2", "comparability of balls with different centers", a2, 0.0, 1.0, Theory),
    ])
}

fn integrability(ctx: &Ctx) -> Result<Vec<Row>> {
    let n = ctx.n() as f64;
    let q = QuadratureConfig { tail_tolerance: Some(1e-3), ..ctx.quad(ctx.r) };
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &s in &ctx.cfg.params.sigmas {
        let p = ctx.params(s)?;
        let v = operator::integrability_constant(&ctx.m, &ctx.z0, ctx.r, &p, &q)?;
        values.push(v);
        let flat = 2.0 * n / s;
        rows.push(Row::at_most(format!("integrability sigma={s}"), "truncated second moment of the kernel", v, 0.0, flat * (1.0 + 1e-3), Theory));
        if let ManifoldModel::Euclidean { .. } = ctx.m {
            rows.push(Row::at_most(
                format!("flat closed form sigma={s}"),
                "truncated second moment of the kernel, flat value n(1+(2-sigma)/sigma)",
                ((v - flat) / flat).abs(),
                0.0,
                1e-3,
                Theory,
            ));
        }
    }
    let spread = values.iter().copied().fold(0.0, f64::max) / values.iter().copied().fold(f64::INFINITY, f64::min);
    rows.push(Row::measured("integrability spread", "truncated second moment of the kernel", spread, 0.0));
    Ok(rows)
}

fn barrier_verify(ctx: &Ctx) -> Result<Vec<Row>> {
    let p = &ctx.cfg.params;
    let n = ctx.n();
    let (cubes, _) = ctx.cubes(5.0 * ctx.r, 2)?;
    let consts = AbpConstants::from_cubes(n, ctx.a1(), &cubes)?;
    let base = ctx.params(p.sigma1)?;
    let alpha = barrier::search_alpha(n, &base, p.c1, &barrier::default_alpha_grid())?;
    let spec = BarrierSpec::new(&ctx.m, ctx.z0, ctx.r, alpha, consts.rho0, Plateau::Standard)?;
    let ring = barrier::ring_points(&ctx.m, &spec, ctx.cfg.budgets.ring_samples);
    let mut rows = vec![
        Row::measured("alpha", "barrier exponent from the alpha criterion, doubled", alpha, 0.0),
        Row::measured("rho0", "ring inner radius constant", consts.rho0, 0.0),
    ];
    let mut large = vec![p.sigma1, 1.9, 1.95, 1.99];
    large.dedup();
    for &s in &large {
        let r = barrier::verify_supersolution(&ctx.m, &spec, BarrierKind::Plain, &ctx.params(s)?, &ring)?;
        rows.push(Row::at_most(format!("supersolution sigma={s}"), "barrier supersolution R^s M+ v + Lambda <= 0", r.max_value, r.error_bar, 0.0, Theory));
    }
    let small_alpha = alpha.max(n as f64 / 2.0);
    let kappa_base = BarrierSpec::new(&ctx.m, ctx.z0, ctx.r, small_alpha, consts.rho0, Plateau::Kappa(0.25))?;
    let (kappa, reports) = barrier::search_kappa(&ctx.m, &kappa_base, &ctx.params(p.small_sigmas[0])?, &p.small_sigmas, &ring)?;
    rows.push(Row::measured("kappa", "plateau constant of the small-order barrier", kappa, 0.0));
    for r in reports {
        rows.push(Row::at_most(
            format!("kappa supersolution sigma={}", r.sigma),
            "small-order barrier supersolution",
            r.max_value,
            r.error_bar,
            0.0,
            Theory,
        ));
    }
    let mut sigmas = p.small_sigmas.clone();
    sigmas.extend(&large);
    let smooth_spec = BarrierSpec { alpha: small_alpha, plateau: Plateau::Kappa(kappa), ..spec };
    let c = barrier::barrier_bounds(&ctx.m, &smooth_spec, &base, &sigmas, ctx.cfg.budgets.ring_samples, ctx.cfg.budgets.ball_grid)?;
    let tag = "smoothed barrier properties";
    rows.push(Row::at_least("smoothed v outside B5R", tag, c.outside_min, 0.0, 0.0, Theory));
    rows.push(Row::at_most("smoothed v on B2R", tag, c.inner_max, 0.0, 0.0, Theory));
    for r in &c.ring {
        rows.push(Row::at_most(format!("smoothed supersolution sigma={}", r.sigma), tag, r.max_value, r.error_bar, 0.0, Theory));
    }
    rows.push(Row::measured("smoothed operator bound C", tag, c.operator_max, c.operator_error));
    rows.push(Row::measured("smoothed lower bound C", tag, c.lower_bound, 0.0));
    Ok(rows)
}

fn abp(ctx: &Ctx) -> Result<Vec<Row>> {
    let (m, z0, r) = (&ctx.m, ctx.z0, ctx.r);
    let n = ctx.n();
    let (cubes, cube_report) = ctx.cubes(5.0 * r, 2)?;
    let consts = AbpConstants::from_cubes(n, ctx.a1(), &cubes)?;
    let b = &ctx.cfg.budgets;
    let cfg = AbpConfig { measure_samples: b.measure_samples, f_grid: b.ball_grid, ..AbpConfig::default() };
    let mut rows = vec![Row::at_most(
        "cube uniqueness violations",
        "dyadic cubes of one generation are disjoint",
        cube_report.uniqueness_violations as f64,
        0.0,
        0.0,
        Theory,
    )];
    let (violations, worst) = envelope::contraction_trials(m, &z0, r, b.cube_samples.min(10_000))?;
    rows.push(Row::at_most("vertex contraction violations", "vertex map contraction d(y*,y) <= |exp^-1 y* - exp^-1 y|", violations as f64, 0.0, 0.0, Theory));
    rows.push(Row::at_most("vertex contraction worst ratio", "vertex map contraction", worst, 0.0, 1.0 + 1e-8, Theory));
    for u in functions::abp_family(m, z0, r) {
        let setup = envelope::abp_setup(m, &u, &z0, r, &cubes, &cfg)?;
        let name = &u.name;
        rows.push(Row::at_most(format!("{name}: uncovered contacts"), "cube cover of the contact set", setup.uncovered_contacts as f64, 0.0, 0.0, Theory));
        rows.push(Row::at_least(format!("{name}: contacts"), "contact set", setup.contacts.len() as f64, 0.0, 1.0, Theory));
        let mut c_emp = Vec::new();
        for &s in &ctx.cfg.params.sigmas {
            let params = ctx.params(s)?;
            let q = ctx.quad_extended(r / 2.0, &params);
            let sup = envelope::pucci_minus_sup(m, &params, &u, &z0, 5.0 * r, b.ball_grid, &q)?;
            let f = FieldFunction::constant(sup.max(0.0));
            let rep = envelope::abp_evaluate(&setup, &u, &f, &params, &cubes, &consts, &cfg, &q)?;
            rows.push(Row::measured(format!("{name}: C_emp sigma={s}"), "discrete ABP key estimate, empirical constant", rep.c_emp, 0.0));
            rows.push(Row::at_most(format!("{name}: M- u > f sigma={s}"), "hypothesis M- u <= f", rep.f_violations as f64, 0.0, 0.0, Theory));
            rows.push(Row::at_least(format!("{name}: occupancy sigma={s}"), "cube occupancy near the envelope", rep.occupancy_min, 0.0, 1e-12, Theory));
            rows.push(Row::measured(format!("{name}: required cube generation sigma={s}"), "cube diameter bound for the ABP cover", rep.required_generation as f64, 0.0));
            c_emp.push(rep.c_emp);
            let m0 = ctx.cfg.params.abp.m0;
            let r0 = consts.ring_radius(s, 0, r) / r;
            if m0 * r0 * r0 < envelope::contact_tolerance(&u) {
                rows.push(Row::measured(format!("{name}: unresolved ring scale r0/R sigma={s}"), "good ring search", r0, 0.0));
                continue;
            }
            let ring_cfg = RingConfig::default();
            let mut k_max = 0usize;
            for c in setup.contacts.iter().take(ctx.cfg.params.abp.ring_contacts) {
                let (k, _) = envelope::good_ring_search(m, &u, c, m0, f.eval(&c.contact), &params, &consts, r, &ring_cfg)?;
                k_max = k_max.max(k);
            }
            rows.push(Row::at_most(format!("{name}: good ring index sigma={s}"), "good ring search", k_max as f64, 0.0, ring_cfg.k_cap as f64, Theory));
        }
        let spread = spread(&c_emp);
        rows.push(Row::at_most(format!("{name}: C_emp variation"), "discrete ABP key estimate, stability in sigma", spread, 0.0, 3.0, Configured));
    }
    Ok(rows)
}

fn sigma_limit(ctx: &Ctx) -> Result<Vec<Row>> {
    let m = &ctx.m;
    let weight = match ctx.cfg.kernel_spec()? {
        KernelSpec::Model => 1.0,
        KernelSpec::Const(w) => w,
        KernelSpec::Aniso(_) => return Err(Error::Config("sigma-limit needs a kernel with a closed-form limit".into())),
    };
    let c = (m.injectivity_radius(&ctx.z0) / 3.0).min(1.0);
    let q = ctx.quad(c / 2.0);
    let mut cases = vec![(functions::cutoff_square(m, ctx.z0, c), 2.0 * ctx.n() as f64, 0.02)];
    if let ManifoldModel::Sphere { dim, curvature } = *m {
        let h = functions::sphere_height();
        let lap = -(dim as f64) * curvature * h.eval(&ctx.z0);
        cases.push((h, lap, 0.05));
    }
    let spec = ctx.cfg.kernel_spec()?;
    let top = ctx.cfg.params.sigmas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows = Vec::new();
    for (u, lap, tol) in cases {
        let target = weight * lap / 2.0;
        for &s in &ctx.cfg.params.sigmas {
            let nu = KernelDensity::from_spec(&spec, m, ctx.params(s)?);
            let v = operator::evaluate_linear(&nu, &u, &ctx.z0, &q)?;
            let dev = ((v.value - target) / target).abs();
            let check = format!("{}: relative deviation sigma={s}", u.name);
            let tag = "limit sigma -> 2 of the operator, Laplace-Beltrami / 2";
            let err = v.error_bar / target.abs();
            rows.push(if s == top { Row::at_most(check, tag, dev, err, tol, Configured) } else { Row::measured(check, tag, dev, err) });
        }
    }
    Ok(rows)
}

fn sample_values(ctx: &Ctx, u: &FieldFunction, radius: f64, salt: u64) -> Vec<(Point, f64, f64)> {
    let mut pts = ctx.ball(radius, ctx.cfg.budgets.oscillation_samples, salt);
    pts.push((ctx.z0, 0.0));
    pts.into_iter().map(|(p, w)| (p, w, u.eval(&p))).collect()
}

fn harnack(ctx: &Ctx) -> Result<Vec<Row>> {
    let hp = ctx.cfg.params.harnack;
    let sigmas = &ctx.cfg.params.sigmas;
    let mut rows = Vec::new();
    let tag = "Harnack quotient sup u / (inf u + C0 R^s)";
    let mut family_max = vec![0.0f64; sigmas.len()];
    for u in functions::harnack_family(&ctx.m, ctx.z0, ctx.r) {
        let vals = sample_values(ctx, &u, ctx.r, 2);
        let sup = vals.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
        let inf = vals.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
        let (mut num, mut den) = (0.0, 0.0);
        for (_, w, v) in &vals {
            num += w * v.powf(hp.p);
            den += w;
        }
        let avg = (num / den).powf(1.0 / hp.p);
        let mut qs = Vec::new();
        for (i, &s) in sigmas.iter().enumerate() {
            let (c0, c0_err) = c0_constant(ctx, &u, &ctx.params(s)?)?;
            let rs = ctx.r.powf(s);
            let qv = sup / (inf + c0 * rs);
            let q_err = sup / (inf + (c0 - c0_err).max(0.0) * rs) - qv;
            qs.push(qv);
            family_max[i] = family_max[i].max(qv);
            rows.push(Row::measured(format!("{}: C0 sigma={s}", u.name), "right-hand side bound C0", c0, c0_err));
            rows.push(Row::measured(format!("{}: Q sigma={s}", u.name), tag, qv, q_err));
            rows.push(Row::measured(format!("{}: weak ratio sigma={s}", u.name), "weak Harnack ratio (avg u^p)^(1/p) / (inf u + C0 R^s)", avg / (inf + c0 * rs), 0.0));
        }
        rows.push(Row::measured(format!("{}: Q variation", u.name), tag, spread(&qs), 0.0));
    }
    for (&s, &q) in sigmas.iter().zip(&family_max) {
        rows.push(Row::new(format!("family max Q sigma={s}"), tag, q, f64::NAN, 0.0, q.is_finite(), Theory));
    }
    rows.push(Row::at_most("family max Q variation", "Harnack constant robustness in sigma", spread(&family_max), 0.0, hp.variation_cap, Configured));
    Ok(rows)
}

fn spread(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max) / xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Oscillation of `u` over `B(z₀, 7·4^{-k}R)`, `k = 0..=scales`.
fn oscillations(ctx: &Ctx, u: &FieldFunction, scales: usize) -> Vec<(f64, f64)> {
    (0..=scales)
        .map(|k| {
            let rk = 7.0 * 4f64.powi(-(k as i32)) * ctx.r;
            let vals = sample_values(ctx, u, rk, 3);
            let hi = vals.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
            (rk, hi - lo)
        })
        .collect()
}

/// Fitted exponent of `osc ~ radius^α`.
pub fn hoelder_exponent(osc: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = osc.iter().map(|o| o.0.ln()).collect();
    let ys: Vec<f64> = osc.iter().map(|o| o.1.max(1e-300).ln()).collect();
    fit_slope(&xs, &ys)
}

fn hoelder(ctx: &Ctx) -> Result<Vec<Row>> {
    let hp = ctx.cfg.params.hoelder;
    let (m, z0, r) = (&ctx.m, ctx.z0, ctx.r);
    let mut rows = Vec::new();
    for (u, _) in functions::hoelder_family(m, z0, r) {
        let osc = oscillations(ctx, &u, hp.scales);
        let vals = sample_values(ctx, &u, r, 4);
        let u0 = u.eval(&z0);
        let sup_norm = sample_values(ctx, &u, 7.0 * r, 5).iter().map(|v| v.2.abs()).fold(0.0, f64::max);
        let mut exps = Vec::new();
        for &s in &ctx.cfg.params.sigmas {
            let alpha = hoelder_exponent(&osc);
            exps.push(alpha);
            let (c0, _) = c0_constant(ctx, &u, &ctx.params(s)?)?;
            let scale = sup_norm + c0 * r.powf(s);
            let a = alpha.min(1.0);
            let ratio = vals
                .iter()
                .filter(|v| m.dist(&z0, &v.0) > 0.0)
                .map(|v| (v.2 - u0).abs() / ((m.dist(&z0, &v.0) / r).powf(a) * scale))
                .fold(0.0, f64::max);
            rows.push(Row::at_least(format!("{}: fitted exponent sigma={s}", u.name), "Hoelder exponent from oscillation decay on B(z0, 7 4^-k R)", alpha, 0.0, 1e-12, Theory));
            rows.push(Row::at_most(format!("{}: Hoelder ratio sigma={s}", u.name), "Hoelder estimate |u(x)-u(z0)| <= C (d/R)^a (|u|_inf + C0 R^s)", ratio, 0.0, hp.ratio_cap, Configured));
        }
        let spread = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max) - exps.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(Row::at_most(format!("{}: exponent spread", u.name), "Hoelder exponent stability in sigma", spread, 0.0, hp.stability, Configured));
    }
    Ok(rows)
}

/// Tail fractions `μ({u > t} ∩ Q)/μ(Q)` at `t = M₀^i`, `i = 0..levels`.
pub fn level_tails(values: &[(f64, f64)], m0: f64, levels: usize) -> Vec<(f64, f64)> {
    let total: f64 = values.iter().map(|v| v.0).sum();
    (0..levels)
        .map(|i| {
            let t = m0.powi(i as i32);
            let above: f64 = values.iter().filter(|v| v.1 > t).map(|v| v.0).sum();
            (t, above / total)
        })
        .collect()
}

/// `(ε, C)` of the envelope `tail ≤ C t^{-ε}` fitted on the unsaturated levels.
pub fn power_envelope(tails: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<&(f64, f64)> = tails.iter().filter(|t| t.1 > 0.0 && t.1 < 1.0).collect();
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let xs: Vec<f64> = pts.iter().map(|t| t.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|t| t.1.ln()).collect();
    let eps = -fit_slope(&xs, &ys);
    let c = tails.iter().map(|t| t.1 * t.0.powf(eps)).fold(0.0, f64::max);
    (eps, c)
}

fn measure_decay(ctx: &Ctx) -> Result<Vec<Row>> {
    let (m, z0, r) = (&ctx.m, ctx.z0, ctx.r);
    let mp = ctx.cfg.params.measure;
    let delta0 = ctx.cfg.params.delta0;
    let (cubes, _) = ctx.cubes(2.0 * r, 3)?;
    let (c1, c2) = (cubes.c1.unwrap_or(f64::NAN), cubes.c2.unwrap_or(f64::NAN));
    let k_r = cubes.generation_for_radius(r)?.min(cubes.j_max);
    let delta1 = delta0 * (1.0 - delta0) / 2.0;
    let u = functions::pole(m, z0, delta1 * r, mp.gamma, 1e-3);
    let q1 = cubes.locate(&z0, k_r)?;
    let reach = (c2 * cubes.scale(k_r)).min(2.0 * r);
    let in_q1: Vec<(f64, f64)> = ctx
        .ball(reach, ctx.cfg.budgets.measure_samples, 6)
        .par_iter()
        .filter(|(p, _)| cubes.locate(p, k_r).ok() == Some(q1))
        .map(|(p, w)| (*w, u.eval(p)))
        .collect();
    let tails = level_tails(&in_q1, mp.m0, mp.levels);
    let (eps, c) = power_envelope(&tails);
    let tag = "decay in measure of super-level sets";
    let mut rows = vec![
        Row::measured("cube generation k_R", "dyadic generation comparable to R", k_r as f64, 0.0),
        Row::measured("cube samples", tag, in_q1.len() as f64, 0.0),
    ];
    for (t, f) in &tails {
        rows.push(Row::measured(format!("tail t={t}"), tag, *f, 0.0));
    }
    rows.push(Row::at_least("decay exponent eps", tag, eps, 0.0, 1e-12, Theory));
    rows.push(Row::measured("envelope constant C", tag, c, 0.0));
    rows.push(Row::measured("profile exponent n/gamma", "level-set geometry of the pole profile", ctx.n() as f64 / mp.gamma, 0.0));

    let delta = 2.0 * c1 * delta0 / c2;
    let big: f64 = ctx.ball(7.0 * r, ctx.cfg.budgets.measure_samples, 7).iter().map(|v| v.1).sum();
    let low: f64 = ctx
        .ball(delta * r, ctx.cfg.budgets.measure_samples, 8)
        .iter()
        .filter(|(p, _)| u.eval(p) <= mp.m0)
        .map(|v| v.1)
        .sum();
    rows.push(Row::measured("c0", "measure of {u <= M0} in B(z0, delta R) over B(z0, 7R)", low / big, 0.0));

    let grid = ctx.ball(7.0 * r, ctx.cfg.budgets.ball_grid, 9);
    for &s in &ctx.cfg.params.sigmas {
        let p = ctx.params(s)?;
        let q = ctx.quad_extended(delta1 * r / 2.0, &p);
        let worst = grid
            .par_iter()
            .map(|(x, _)| operator::pucci_minus(m, &p, &u, x, &q).map(|v| (v.value, v.error_bar)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 + b.1 > a.0 + a.1 { b } else { a });
        let rs = r.powf(s);
        rows.push(Row::measured(format!("eps0 sigma={s}"), "R^s sup M- u over B(z0, 7R)", rs * worst.0, rs * worst.1));
    }
    Ok(rows)
}
