//! Radial barriers `-(d_{z₀}/5R)^{-2α}` with a plateau at the center, their
//! smoothed version, and numerical verification of the supersolution
//! inequality `R^σ M⁺v + Λ ≤ 0` on the ring `B_{5R} \ B̄_{ρ₀R}`.
//!
//! At a ring point `x` with `R₀ = d(x, z₀)` the operator is evaluated on
//! `max(v, v(R₀/2))`, which agrees with `v` on `B(x, R₀/2)` and lies above
//! `v` everywhere. Since both functions agree at `x`, `M⁺` of the clipped
//! function bounds `M⁺v(x)` from above, and the clipped function stays
//! within a few orders of magnitude of `v(x)`.

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::manifold::{ManifoldModel, Point};
use crate::numeric::sphere_area;
use crate::operator::{pucci_plus, FieldFunction, QuadratureConfig, TailPolicy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Plateau variant: `ρ₀/20` for the large-`σ` barrier, `κρ₀/5` for the
/// small-`σ` one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plateau {
    Standard,
    Kappa(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub center: Point,
    pub radius: f64,
    pub alpha: f64,
    pub rho0: f64,
    pub plateau: Plateau,
}

impl BarrierSpec {
    pub fn new(m: &ManifoldModel, center: Point, radius: f64, alpha: f64, rho0: f64, plateau: Plateau) -> Result<Self> {
        radius_precondition(m, &center, radius)?;
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        if !(rho0 > 0.0 && rho0 < 1.0) {
            return Err(Error::Config(format!("rho0 must lie in (0, 1), got {rho0}")));
        }
        if let Plateau::Kappa(k) = plateau {
            if !(k > 0.0 && k <= 0.25) {
                return Err(Error::Config(format!("kappa must lie in (0, 1/4], got {k}")));
            }
            if alpha < m.dim() as f64 / 2.0 {
                return Err(Error::Config("the kappa variant needs alpha >= n/2".into()));
            }
        }
        Ok(Self { center, radius, alpha, rho0, plateau })
    }

    /// `ρ₀/20` or `κρ₀/5`.
    pub fn plateau_ratio(&self) -> f64 {
        match self.plateau {
            Plateau::Standard => self.rho0 / 20.0,
            Plateau::Kappa(k) => k * self.rho0 / 5.0,
        }
    }

    fn kappa(&self) -> f64 {
        match self.plateau {
            Plateau::Standard => 0.25,
            Plateau::Kappa(k) => k,
        }
    }

    /// Barrier as a function of `d = d_{z₀}(x)`.
    pub fn profile(&self, d: f64) -> f64 {
        let s = (d / (5.0 * self.radius)).max(self.plateau_ratio());
        -s.powf(-2.0 * self.alpha)
    }
}

/// `15R < inj(z₀) ∧ π/√K`.
pub fn radius_precondition(m: &ManifoldModel, z0: &Point, r: f64) -> Result<()> {
    let inj = m.injectivity_radius(z0);
    let k = m.sectional_curvature_sup(z0, inj.min(1e3)).value;
    let limit = if k > 0.0 { inj.min(PI / k.sqrt()) } else { inj };
    if !(r > 0.0 && 15.0 * r < limit) {
        return Err(Error::Config(format!("15R = {} must be below inj ∧ π/√K = {limit}", 15.0 * r)));
    }
    Ok(())
}

/// `max{-(plateau)^{-2α}, -(d_{z₀}(x)/5R)^{-2α}}`.
pub fn barrier_value(m: &ManifoldModel, spec: &BarrierSpec, x: &Point) -> f64 {
    spec.profile(m.dist(&spec.center, x))
}

/// `ψ(t) = (9/25)^{-α} - (t/25)^{-α}` for `t ≥ t₁ = (κρ₀)²`, joined on
/// `[t₁/2, t₁]` by `c + a s³ + b s⁴` (with `s = t - t₁/2`) to a constant.
/// The quartic matches value, slope and curvature at `t₁` and is flat to
/// second order at `t₁/2`; it is increasing on the junction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothProfile {
    pub alpha: f64,
    pub t1: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SmoothProfile {
    pub fn new(alpha: f64, kappa: f64, rho0: f64) -> Self {
        let t1 = (kappa * rho0).powi(2);
        let h = t1 / 2.0;
        let (p, dp, ddp) = Self::outer(alpha, t1);
        let b = (ddp - 2.0 * dp / h) / (4.0 * h * h);
        let a = (dp - 4.0 * b * h.powi(3)) / (3.0 * h * h);
        let c = p - a * h.powi(3) - b * h.powi(4);
        Self { alpha, t1, a, b, c }
    }

    fn outer(alpha: f64, t: f64) -> (f64, f64, f64) {
        let q = t / 25.0;
        let v = (9.0f64 / 25.0).powf(-alpha) - q.powf(-alpha);
        let dv = alpha / 25.0 * q.powf(-alpha - 1.0);
        let ddv = -alpha * (alpha + 1.0) / 625.0 * q.powf(-alpha - 2.0);
        (v, dv, ddv)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t >= self.t1 {
            return Self::outer(self.alpha, t).0;
        }
        let s = (t - self.t1 / 2.0).max(0.0);
        self.c + self.a * s.powi(3) + self.b * s.powi(4)
    }

    /// Lowest value, attained on `[0, t₁/2]`.
    pub fn minimum(&self) -> f64 {
        self.c
    }
}

/// `ψ(d_{z₀}(x)²/R²)`, with `κ = 1/4` for the standard plateau.
pub fn smoothed_barrier(m: &ManifoldModel, spec: &BarrierSpec, x: &Point) -> f64 {
    let d = m.dist(&spec.center, x) / spec.radius;
    SmoothProfile::new(spec.alpha, spec.kappa(), spec.rho0).eval(d * d)
}

/// Which barrier a verification runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    Plain,
    Smoothed,
}

fn radial(spec: &BarrierSpec, kind: BarrierKind) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    let s = *spec;
    let prof = SmoothProfile::new(s.alpha, s.kappa(), s.rho0);
    move |d: f64| match kind {
        BarrierKind::Plain => s.profile(d),
        BarrierKind::Smoothed => prof.eval((d / s.radius).powi(2)),
    }
}

/// The barrier clipped from below at its value on the sphere `d = d_clip`.
pub fn clipped_barrier(m: &ManifoldModel, spec: &BarrierSpec, kind: BarrierKind, d_clip: f64) -> FieldFunction {
    let f = radial(spec, kind);
    let floor = f(d_clip);
    let (mm, c) = (*m, spec.center);
    let bound = floor.abs().max(f(1e6 * spec.radius).abs());
    FieldFunction::new(format!("barrier clipped at d={d_clip}"), bound, move |p| f(mm.dist(&c, p)).max(floor))
}

/// Quadrature setup for barrier checks at a point with `d(x, z₀) = r0`.
pub fn barrier_quadrature(r0: f64, spec: &BarrierSpec, params: &KernelParams) -> QuadratureConfig {
    let mut q = QuadratureConfig::new((r0 / 2.0).max(spec.rho0 * spec.radius / 8.0));
    q.tail_policy = TailPolicy::Extend;
    q.tail_tolerance = Some(1e-3 * params.big_lambda * spec.radius.powf(-params.sigma));
    q
}

/// `R^σ M⁺v(x)` with its error bar, via the clipped comparison function.
pub fn scaled_pucci_plus(m: &ManifoldModel, spec: &BarrierSpec, kind: BarrierKind, params: &KernelParams, x: &Point) -> Result<(f64, f64)> {
    let r0 = m.dist(&spec.center, x);
    let q = barrier_quadrature(r0, spec, params);
    let u = clipped_barrier(m, spec, kind, (r0 - q.split_radius).max(0.0));
    let v = pucci_plus(m, params, &u, x, &q)?;
    let s = spec.radius.powf(params.sigma);
    Ok((s * v.value, s * v.error_bar))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub sigma: f64,
    pub samples: usize,
    /// `max (R^σ M⁺v + Λ)` over the samples.
    pub max_value: f64,
    /// Error bar at the maximizer.
    pub error_bar: f64,
    pub witness: Option<Point>,
    pub pass: bool,
}

/// Ring points of `B_{5R}(z₀) \ B̄_{ρ₀R}(z₀)`.
pub fn ring_points(m: &ManifoldModel, spec: &BarrierSpec, count: usize) -> Vec<Point> {
    let inner = spec.rho0 * spec.radius;
    let mut out = Vec::with_capacity(count);
    let mut batch = count;
    while out.len() < count {
        out = m
            .sample_ball(&spec.center, 5.0 * spec.radius * (1.0 - 1e-9), batch, &[0.5, 0.5, 0.5])
            .into_iter()
            .map(|(p, _)| p)
            .filter(|p| m.dist(&spec.center, p) > inner)
            .take(count)
            .collect();
        batch *= 2;
    }
    out
}

/// Evaluates `R^σ M⁺v + Λ` on `samples`; passes iff every value plus its
/// error bar is nonpositive.
pub fn verify_supersolution(
    m: &ManifoldModel,
    spec: &BarrierSpec,
    kind: BarrierKind,
    params: &KernelParams,
    samples: &[Point],
) -> Result<SupersolutionReport> {
    let rows: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|x| scaled_pucci_plus(m, spec, kind, params, x))
        .collect::<Result<_>>()?;
    let mut worst = (f64::NEG_INFINITY, 0.0, None);
    let mut pass = true;
    for ((v, e), x) in rows.iter().zip(samples) {
        let val = v + params.big_lambda;
        if val + e > 0.0 {
            pass = false;
        }
        if val + e > worst.0 + worst.1 {
            worst = (val, *e, Some(*x));
        }
    }
    Ok(SupersolutionReport {
        sigma: params.sigma,
        samples: samples.len(),
        max_value: worst.0,
        error_bar: worst.1,
        witness: if pass { None } else { worst.2 },
        pass,
    })
}

/// `λ(2α+2)(3/π)^{n-1}∫_{∂B₁}v₁² - Λ|∂B₁| - C₁Λ`; positive when α is large enough.
pub fn alpha_criterion(n: usize, params: &KernelParams, c1: f64, alpha: f64) -> f64 {
    let area = sphere_area(n);
    params.lambda * (2.0 * alpha + 2.0) * (3.0 / PI).powi(n as i32 - 1) * area / n as f64 - params.big_lambda * area - c1 * params.big_lambda
}

/// Smallest grid `α` satisfying the criterion, doubled.
pub fn search_alpha(n: usize, params: &KernelParams, c1: f64, grid: &[f64]) -> Result<f64> {
    grid.iter()
        .copied()
        .find(|&a| alpha_criterion(n, params, c1, a) > 0.0)
        .map(|a| 2.0 * a)
        .ok_or(Error::GridExhausted { last: grid.last().copied().unwrap_or(f64::NAN) })
}

/// Default trial grid `0.25, 0.5, …, 200`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=800).map(|i| 0.25 * i as f64).collect()
}

/// Halves `κ` from `1/4` until the plateau-`κ` barrier passes for every
/// `σ` in `sigmas`; at most 20 halvings.
pub fn search_kappa(
    m: &ManifoldModel,
    base: &BarrierSpec,
    params: &KernelParams,
    sigmas: &[f64],
    samples: &[Point],
) -> Result<(f64, Vec<SupersolutionReport>)> {
    let mut kappa = 0.25;
    for _ in 0..=20 {
        let spec = BarrierSpec { plateau: Plateau::Kappa(kappa), ..*base };
        let reports: Vec<SupersolutionReport> = sigmas
            .iter()
            .map(|&s| verify_supersolution(m, &spec, BarrierKind::Plain, &params.with_sigma(s), samples))
            .collect::<Result<_>>()?;
        if reports.iter().all(|r| r.pass) {
            return Ok((kappa, reports));
        }
        kappa /= 2.0;
    }
    Err(Error::GridExhausted { last: kappa * 2.0 })
}

/// The five sampled checks on the smoothed barrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierBounds {
    /// `min v` off `B_{5R}`; must be `≥ 0`.
    pub outside_min: f64,
    /// `max v` on `B_{2R}`; must be `≤ 0`.
    pub inner_max: f64,
    /// Supersolution rows on the ring, one per `σ`.
    pub ring: Vec<SupersolutionReport>,
    /// Measured `C = max R^σ M⁺v` over `B_{5R}` and `σ`, with its error bar.
    pub operator_max: f64,
    pub operator_error: f64,
    /// Measured `C = -min v` over `B_{5R}`.
    pub lower_bound: f64,
    pub pass: [bool; 5],
}

/// Samples the five properties for the smoothed barrier of `spec`.
pub fn barrier_bounds(
    m: &ManifoldModel,
    spec: &BarrierSpec,
    params: &KernelParams,
    sigmas: &[f64],
    ring_count: usize,
    ball_count: usize,
) -> Result<BarrierBounds> {
    let r = spec.radius;
    let z0 = spec.center;
    let v = |p: &Point| smoothed_barrier(m, spec, p);
    let outer = 5.0 * r;
    let off: Vec<Point> = {
        let reach = (m.injectivity_radius(&z0) * (1.0 - 1e-6)).min(20.0 * r);
        m.sample_ball(&z0, reach, 4 * ball_count, &[0.2, 0.7, 0.4])
            .into_iter()
            .map(|(p, _)| p)
            .filter(|p| m.dist(&z0, p) >= outer)
            .collect()
    };
    let outside_min = off.iter().map(v).fold(f64::INFINITY, f64::min);
    let ball = m.sample_ball(&z0, outer, ball_count, &[0.3, 0.1, 0.6]);
    let inner_max = ball.iter().filter(|(p, _)| m.dist(&z0, p) < 2.0 * r).map(|(p, _)| v(p)).fold(f64::NEG_INFINITY, f64::max);
    let ring_pts = ring_points(m, spec, ring_count);
    let ring: Vec<SupersolutionReport> = sigmas
        .iter()
        .map(|&s| verify_supersolution(m, spec, BarrierKind::Smoothed, &params.with_sigma(s), &ring_pts))
        .collect::<Result<_>>()?;
    let mut operator_max = f64::NEG_INFINITY;
    let mut operator_error = 0.0;
    let mut grid: Vec<Point> = ball.iter().map(|(p, _)| *p).collect();
    grid.push(z0);
    for &s in sigmas {
        let p = params.with_sigma(s);
        let rows: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|x| scaled_pucci_plus(m, spec, BarrierKind::Smoothed, &p, x))
            .collect::<Result<_>>()?;
        for (val, e) in rows {
            if val + e > operator_max + operator_error {
                operator_max = val;
                operator_error = e;
            }
        }
    }
    let lower_bound = -SmoothProfile::new(spec.alpha, spec.kappa(), spec.rho0).minimum();
    let pass = [
        outside_min >= 0.0,
        inner_max <= 0.0,
        ring.iter().all(|r| r.pass),
        (operator_max + operator_error).is_finite(),
        lower_bound.is_finite(),
    ];
    Ok(BarrierBounds { outside_min, inner_max, ring, operator_max, operator_error, lower_bound, pass })
}
