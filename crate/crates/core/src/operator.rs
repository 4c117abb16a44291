//! Evaluation of `Lu(x)` and of the extremal operators `M±u(x)`.
//!
//! Inside `B_R(x)` the integral is written in geodesic polar coordinates and
//! every direction `v` is paired with `-v`, so that `z = exp_x(tv)` and its
//! reflection `ẑ = exp_x(-tv)` are handled together. This produces the
//! symmetric part `I₁` (second differences against `dV_s`) and the
//! antisymmetric part `I₂` (first differences against `dV_a`). Outside the
//! ball the far-field part `I₃` is integrated on doubling shells.
//!
//! Radial nodes inside the ball are Gauss–Legendre points on geometric shells
//! `[Rq^{k+1}, Rq^k]`. The disc `B_r` below the innermost shell is integrated
//! in closed form: the pair integrand divided by `t²` is fitted by a quadratic
//! through `t = r, 2r, 4r`. Going further in with shells only trades
//! truncation error for cancellation error in the second differences.

use crate::error::{Error, Result};
use crate::kernel::{KernelDensity, KernelParams};
use crate::manifold::{Coords, ManifoldModel, Point, VolumeFn, CUT_GUARD};
use crate::numeric::{gauss_legendre, gauss_legendre_on, unit_ball_volume, KahanSum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// A bounded scalar field on the manifold, `C²` on a ball.
#[derive(Clone)]
pub struct FieldFunction {
    pub name: String,
    f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
    pub smooth_center: Option<Point>,
    pub smooth_radius: f64,
    pub global_bound: f64,
}

impl std::fmt::Debug for FieldFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldFunction")
            .field("name", &self.name)
            .field("smooth_radius", &self.smooth_radius)
            .field("global_bound", &self.global_bound)
            .finish()
    }
}

impl FieldFunction {
    /// A function smooth everywhere with `|u| ≤ global_bound`.
    pub fn new(name: impl Into<String>, global_bound: f64, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            smooth_center: None,
            smooth_radius: f64::INFINITY,
            global_bound,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), c.abs(), move |_| c)
    }

    /// Restricts the declared smooth domain to `B(center, radius)`.
    pub fn smooth_on(mut self, center: Point, radius: f64) -> Self {
        self.smooth_center = Some(center);
        self.smooth_radius = radius;
        self
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        (self.f)(p)
    }

    pub fn scaled(&self, t: f64) -> Self {
        let f = self.f.clone();
        Self {
            name: format!("{t}*{}", self.name),
            f: Arc::new(move |p| t * f(p)),
            global_bound: self.global_bound * t.abs(),
            ..self.clone()
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self {
            name: format!("{}+{c}", self.name),
            f: Arc::new(move |p| f(p) + c),
            global_bound: self.global_bound + c.abs(),
            ..self.clone()
        }
    }

    /// Pointwise sum; the smooth domain is the smaller of the two when both
    /// are declared around the same center.
    pub fn plus(&self, other: &FieldFunction) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        let (center, radius) = if self.smooth_radius <= other.smooth_radius {
            (self.smooth_center, self.smooth_radius)
        } else {
            (other.smooth_center, other.smooth_radius)
        };
        Self {
            name: format!("{}+{}", self.name, other.name),
            f: Arc::new(move |p| f(p) + g(p)),
            smooth_center: center,
            smooth_radius: radius,
            global_bound: self.global_bound + other.global_bound,
        }
    }

    /// Distance from `x` to the boundary of the declared smooth ball.
    pub fn smooth_margin(&self, m: &ManifoldModel, x: &Point) -> f64 {
        match &self.smooth_center {
            None => f64::INFINITY,
            Some(c) => self.smooth_radius - m.dist(c, x),
        }
    }
}

/// Treatment of the far field beyond the truncation radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// Truncate at `far_factor · R` and add the analytic tail bound to the error bar.
    AnalyticBound,
    /// Push the truncation radius out until the tail bound meets the tolerance.
    Extend,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Split radius `R`.
    pub split_radius: f64,
    /// Geometric grading ratio `q` of the near-field shells.
    pub ratio: f64,
    /// The innermost shell ends below `inner_fraction · R`.
    pub inner_fraction: f64,
    /// Gauss–Legendre points per shell.
    pub gauss_points: usize,
    /// Angular nodes on `S^{n-1}`.
    pub angular_nodes: usize,
    /// Rotation of the angular grid, in units of the node spacing.
    pub angular_shift: f64,
    pub far_factor: f64,
    pub tail_policy: TailPolicy,
    pub tail_tolerance: Option<f64>,
    /// Drop the far field entirely (restricted evaluations).
    pub mask_far: bool,
}

impl QuadratureConfig {
    pub fn new(split_radius: f64) -> Self {
        Self {
            split_radius,
            ratio: 0.5,
            inner_fraction: 1e-2,
            gauss_points: 6,
            angular_nodes: 64,
            angular_shift: 0.5,
            far_factor: 50.0,
            tail_policy: TailPolicy::AnalyticBound,
            tail_tolerance: None,
            mask_far: false,
        }
    }

    /// Number of near-field shells.
    pub fn levels(&self) -> usize {
        (self.inner_fraction.ln() / self.ratio.ln()).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.split_radius > 0.0 && self.split_radius.is_finite()) {
            return bad("split radius must be positive");
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return bad("grading ratio must lie in (0,1)");
        }
        if !(self.inner_fraction > 0.0 && self.inner_fraction <= 0.2) {
            return bad("inner fraction must lie in (0, 0.2]");
        }
        if self.gauss_points < 3 {
            return bad("at least 3 Gauss points per shell are required");
        }
        if self.angular_nodes < 8 {
            return bad("at least 8 angular nodes are required");
        }
        if self.far_factor <= 1.0 {
            return bad("far factor must exceed 1");
        }
        Ok(())
    }
}

/// Result of one evaluation: `value = i1 + i2 + i3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// Quadrature estimate plus the analytic tail bound.
    pub error_bar: f64,
    /// Analytic far-field tail bound (included in `error_bar`).
    pub tail: f64,
}

/// `δ(u, x, z) = (u(z) + u(T_x z) - 2u(x)) / 2`.
pub fn second_difference(m: &ManifoldModel, u: &FieldFunction, x: &Point, z: &Point) -> Result<f64> {
    let zr = m.reflect(x, z)?;
    Ok(0.5 * (u.eval(z) + u.eval(&zr) - 2.0 * u.eval(x)))
}

/// Analytic bound `2‖u‖_∞ Λ 2^{n+1} (2-σ) / (1 - 2^{-σ}) R_far^{-σ}` on the far field
/// beyond `R_far`, from dyadic shell summation and volume doubling.
pub fn tail_bound(n: usize, params: &KernelParams, r_far: f64, u_inf: f64) -> f64 {
    let s = params.sigma;
    2.0 * u_inf * params.big_lambda * 2f64.powi(n as i32 + 1) * (2.0 - s) / (1.0 - 2f64.powf(-s)) * r_far.powf(-s)
}

#[derive(Clone, Copy)]
enum Mode<'a> {
    Linear(&'a KernelDensity),
    Extremal { lambda: f64, big_lambda: f64, sup: bool },
}

impl Mode<'_> {
    fn params(&self, fallback: &KernelParams) -> KernelParams {
        match self {
            Mode::Linear(nu) => nu.params,
            Mode::Extremal { .. } => *fallback,
        }
    }

    /// Extremal weight for an integrand of sign `s`.
    #[inline]
    fn select(&self, s: f64) -> f64 {
        match *self {
            Mode::Extremal { lambda, big_lambda, sup } => {
                if (s > 0.0) == sup {
                    big_lambda
                } else {
                    lambda
                }
            }
            Mode::Linear(_) => unreachable!("linear mode uses the kernel weight"),
        }
    }
}

struct Directions {
    dirs: Vec<Coords>,
    weights: Vec<f64>,
    /// Membership in the half-density subgrid used for the angular error estimate.
    sub: Vec<bool>,
}

/// Half of an antipodally symmetric rule on `S^{n-1}`: each returned
/// direction stands for itself and its antipode.
fn half_directions(n: usize, count: usize, shift: f64) -> Directions {
    let mut out = Directions { dirs: vec![], weights: vec![], sub: vec![] };
    match n {
        2 => {
            let full = count.div_ceil(4) * 4;
            for i in 0..full / 2 {
                let th = 2.0 * PI * (i as f64 + shift) / full as f64;
                out.dirs.push(Coords::from_slice(&[th.cos(), th.sin()]));
                out.weights.push(2.0 * PI / full as f64);
                out.sub.push(i % 2 == 0);
            }
        }
        3 => {
            let mut mt = ((count as f64 / 2.0).sqrt().round() as usize).max(2);
            mt += mt % 2;
            let nphi = 2 * mt;
            let (c, a) = gauss_legendre(mt);
            for j in 0..mt / 2 {
                let r = (1.0 - c[j] * c[j]).max(0.0).sqrt();
                for i in 0..nphi {
                    let ph = 2.0 * PI * (i as f64 + shift) / nphi as f64;
                    out.dirs.push(Coords::from_slice(&[r * ph.cos(), r * ph.sin(), c[j]]));
                    out.weights.push(a[j] * 2.0 * PI / nphi as f64);
                    out.sub.push(i % 2 == 0);
                }
            }
        }
        _ => unreachable!("dimension is validated by the manifold model"),
    }
    out
}

#[derive(Clone, Copy)]
enum Role {
    /// Near-field node; `alt` marks the lower-order comparison rule.
    Near { w: f64, alt: bool },
    Far { w: f64, alt: bool },
    Inner(usize),
}

struct Grid {
    ts: Vec<f64>,
    roles: Vec<Role>,
    inner_h: f64,
    inner_r: f64,
    tail: f64,
}

/// Per-direction partial sums, already multiplied by all radial factors.
#[derive(Clone, Copy, Default)]
struct DirSums {
    i1: f64,
    i2: f64,
    i3: f64,
    i1_alt: f64,
    i2_alt: f64,
    i3_alt: f64,
    inner: f64,
    inner_err: f64,
}

fn shells_rule(edges: &[f64], m: usize, alt: bool, far: bool, ts: &mut Vec<(f64, Role)>) {
    for e in edges.windows(2) {
        for (t, w) in gauss_legendre_on(e[0], e[1], m) {
            let role = if far { Role::Far { w, alt } } else { Role::Near { w, alt } };
            ts.push((t, role));
        }
    }
}

fn far_end(m: &ManifoldModel, x: &Point, cfg: &QuadratureConfig, params: &KernelParams, u_inf: f64) -> Result<(f64, f64)> {
    let r = cfg.split_radius;
    let n = m.dim();
    match *m {
        ManifoldModel::Sphere { curvature, .. } => Ok((PI / curvature.sqrt(), 0.0)),
        ManifoldModel::Euclidean { .. } => {
            let mut end = cfg.far_factor * r;
            if let (TailPolicy::Extend, Some(tol)) = (cfg.tail_policy, cfg.tail_tolerance) {
                let coef = tail_bound(n, params, 1.0, u_inf);
                if coef > tol {
                    end = end.max((coef / tol).powf(1.0 / params.sigma) * 1.000001);
                }
            }
            Ok((end, tail_bound(n, params, end, u_inf)))
        }
        ManifoldModel::Revolution { .. } => {
            let inj = m.injectivity_radius(x);
            let end = (cfg.far_factor * r).min(inj * (1.0 - 1e-9)).max(r);
            Ok((end, tail_bound(n, params, end, u_inf)))
        }
    }
}

fn build_grid(m: &ManifoldModel, x: &Point, cfg: &QuadratureConfig, params: &KernelParams, u_inf: f64) -> Result<Grid> {
    let r = cfg.split_radius;
    let levels = cfg.levels();
    let near_edges: Vec<f64> = (0..=levels).rev().map(|k| r * cfg.ratio.powi(k as i32)).collect();
    let inner_r = near_edges[0];
    let mut entries = Vec::new();
    shells_rule(&near_edges, cfg.gauss_points, false, false, &mut entries);
    shells_rule(&near_edges, cfg.gauss_points - 2, true, false, &mut entries);
    let inner_h = inner_r;
    for j in 0..3 {
        entries.push((inner_h * (1 << j) as f64, Role::Inner(j)));
    }
    let mut tail = 0.0;
    if !cfg.mask_far {
        let (end, t) = far_end(m, x, cfg, params, u_inf)?;
        tail = t;
        if end > r {
            let mut edges = vec![r];
            while *edges.last().unwrap() < end {
                let next = (edges.last().unwrap() * 2.0).min(end);
                edges.push(next);
            }
            shells_rule(&edges, cfg.gauss_points, false, true, &mut entries);
            shells_rule(&edges, cfg.gauss_points - 2, true, true, &mut entries);
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (ts, roles) = entries.into_iter().unzip();
    Ok(Grid { ts, roles, inner_h, inner_r, tail })
}

fn check_preconditions(m: &ManifoldModel, u: &FieldFunction, x: &Point, cfg: &QuadratureConfig) -> Result<()> {
    cfg.validate()?;
    let r = cfg.split_radius;
    let inj = m.injectivity_radius(x);
    if r >= inj - CUT_GUARD {
        return Err(Error::CutLocus { distance: r, inj });
    }
    let margin = u.smooth_margin(m, x);
    if margin < r {
        return Err(Error::Domain { margin, required: r });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn direction_sums(
    m: &ManifoldModel,
    mode: Mode,
    params: &KernelParams,
    vol: &VolumeFn,
    u: &FieldFunction,
    x: &Point,
    u0: f64,
    grid: &Grid,
    v: &Coords,
) -> DirSums {
    let n = m.dim() as i32;
    let inj = m.injectivity_radius(x);
    let plus = m.ray(x, v, &grid.ts);
    let minus = m.ray(x, &(-*v), &grid.ts);
    let neg = -*v;
    let mut out = DirSums::default();
    let mut inner_s = [0.0; 3];
    let mut inner_w = [1.0; 3];
    for (idx, role) in grid.roles.iter().enumerate() {
        let t = grid.ts[idx];
        let (zp, jp) = &plus[idx];
        let (zm, jm) = &minus[idx];
        let up = u.eval(zp);
        let um = u.eval(zm);
        let k = params.model(vol.eval(t), t);
        let radial = t.powi(n - 1);
        match *role {
            Role::Near { w, alt } => {
                let delta = 0.5 * (up + um - 2.0 * u0);
                let (a1, a2) = match mode {
                    Mode::Linear(nu) => {
                        let wp = nu.weight_at(x, zp, Some(v), t);
                        let wm = nu.weight_at(x, zm, Some(&neg), t);
                        let sym = 0.5 * (jp + jm);
                        let anti = 0.5 * (jp - jm);
                        ((wp + wm) * delta * sym, wp * (up - u0) * anti - wm * (um - u0) * anti)
                    }
                    Mode::Extremal { .. } => {
                        let s1 = delta * (jp + jm);
                        let s2 = 0.5 * (up - um) * (jp - jm);
                        let wt = mode.select(s1 + s2);
                        (wt * s1, wt * s2)
                    }
                };
                let f = w * k * radial;
                if alt {
                    out.i1_alt += f * a1;
                    out.i2_alt += f * a2;
                } else {
                    out.i1 += f * a1;
                    out.i2 += f * a2;
                }
            }
            Role::Far { w, alt } => {
                let mut acc = 0.0;
                for (z, j, up_or_um, dir) in [(zp, jp, up, v), (zm, jm, um, &neg)] {
                    let diff = up_or_um - u0;
                    let wt = match mode {
                        Mode::Linear(nu) => nu.weight_at(x, z, (t < inj - CUT_GUARD).then_some(dir), t),
                        Mode::Extremal { .. } => mode.select(diff),
                    };
                    acc += wt * diff * j;
                }
                let val = w * k * radial * acc;
                if alt {
                    out.i3_alt += val;
                } else {
                    out.i3 += val;
                }
            }
            Role::Inner(j) => {
                let delta = 0.5 * (up + um - 2.0 * u0);
                inner_s[j] = delta * (jp + jm) + 0.5 * (up - um) * (jp - jm);
                if let Mode::Linear(nu) = mode {
                    inner_w[j] = 0.5 * (nu.weight_at(x, zp, Some(v), t) + nu.weight_at(x, zm, Some(&neg), t));
                }
            }
        }
    }
    let h = grid.inner_h;
    let f: Vec<f64> = (0..3).map(|j| inner_s[j] / (h * (1 << j) as f64).powi(2)).collect();
    let c2 = (f[2] - 3.0 * f[1] + 2.0 * f[0]) / (6.0 * h * h);
    let c1 = (f[1] - f[0] - 3.0 * c2 * h * h) / h;
    let c0 = f[0] - c1 * h - c2 * h * h;
    let lin1 = (f[1] - f[0]) / h;
    let lin0 = f[0] - lin1 * h;
    let r = grid.inner_r;
    let s = params.sigma;
    let b = (vol.eval(r) / (unit_ball_volume(m.dim()) * r.powi(n)) - 1.0) / (r * r);
    let moments = |a0: f64, a1: f64, a2: f64| {
        (2.0 - s) / unit_ball_volume(m.dim())
            * (a0 * r.powf(2.0 - s) / (2.0 - s) + a1 * r.powf(3.0 - s) / (3.0 - s) + (a2 - b * a0) * r.powf(4.0 - s) / (4.0 - s))
    };
    let disc = moments(c0, c1, c2);
    let disc_lin = moments(lin0, lin1, 0.0);
    let wt = match mode {
        Mode::Linear(_) => inner_w[0],
        Mode::Extremal { .. } => mode.select(disc),
    };
    out.inner = wt * disc;
    out.inner_err = wt * (disc - disc_lin).abs();
    out
}

fn evaluate(m: &ManifoldModel, mode: Mode, params: &KernelParams, u: &FieldFunction, x: &Point, cfg: &QuadratureConfig) -> Result<OperatorValue> {
    check_preconditions(m, u, x, cfg)?;
    let params = mode.params(params);
    let grid = build_grid(m, x, cfg, &params, u.global_bound)?;
    if let Some(tol) = cfg.tail_tolerance {
        if grid.tail > tol {
            return Err(Error::Tail { bound: grid.tail, tolerance: tol });
        }
    }
    let t_max = grid.ts.last().copied().unwrap_or(cfg.split_radius);
    let vol = m.volume_fn(x, t_max);
    let dirs = half_directions(m.dim(), cfg.angular_nodes, cfg.angular_shift);
    let u0 = u.eval(x);
    let sums: Vec<DirSums> = dirs
        .dirs
        .par_iter()
        .map(|v| direction_sums(m, mode, &params, &vol, u, x, u0, &grid, v))
        .collect();

    let mut acc: [KahanSum; 8] = Default::default();
    let mut sub: [KahanSum; 3] = Default::default();
    for ((s, w), in_sub) in sums.iter().zip(&dirs.weights).zip(&dirs.sub) {
        let parts = [s.i1 + s.inner, s.i2, s.i3, s.i1_alt + s.inner, s.i2_alt, s.i3_alt, s.inner_err, 0.0];
        for (a, p) in acc.iter_mut().zip(parts) {
            a.add(w * p);
        }
        if *in_sub {
            for (a, p) in sub.iter_mut().zip([s.i1 + s.inner, s.i2, s.i3]) {
                a.add(2.0 * w * p);
            }
        }
    }
    let v: Vec<f64> = acc.iter().map(|a| a.value()).collect();
    let (i1, i2, i3) = (v[0], v[1], v[2]);
    let radial_err = (i1 - v[3]).abs() + (i2 - v[4]).abs() + (i3 - v[5]).abs();
    let angular_err = (i1 - sub[0].value()).abs() + (i2 - sub[1].value()).abs() + (i3 - sub[2].value()).abs();
    let value = i1 + i2 + i3;
    let roundoff = 1e-13 * (u.global_bound.max(u0.abs()) * params.big_lambda * cfg.split_radius.powf(-params.sigma) + value.abs());
    Ok(OperatorValue {
        value,
        i1,
        i2,
        i3,
        error_bar: radial_err + angular_err + v[6] + grid.tail + roundoff,
        tail: grid.tail,
    })
}

/// `Lu(x)` for a kernel density of the class.
pub fn evaluate_linear(nu: &KernelDensity, u: &FieldFunction, x: &Point, cfg: &QuadratureConfig) -> Result<OperatorValue> {
    evaluate(&nu.manifold, Mode::Linear(nu), &nu.params, u, x, cfg)
}

/// `M⁺u(x)`, realized by pointwise extremal weights on reflection pairs.
pub fn pucci_plus(m: &ManifoldModel, params: &KernelParams, u: &FieldFunction, x: &Point, cfg: &QuadratureConfig) -> Result<OperatorValue> {
    let mode = Mode::Extremal { lambda: params.lambda, big_lambda: params.big_lambda, sup: true };
    evaluate(m, mode, params, u, x, cfg)
}

/// `M⁻u(x)`.
pub fn pucci_minus(m: &ManifoldModel, params: &KernelParams, u: &FieldFunction, x: &Point, cfg: &QuadratureConfig) -> Result<OperatorValue> {
    let mode = Mode::Extremal { lambda: params.lambda, big_lambda: params.big_lambda, sup: false };
    evaluate(m, mode, params, u, x, cfg)
}

/// `(2-σ) ∫_M (R² ∧ d_x²) k(x, z) dV / R^{2-σ}`.
///
/// The angular integral of the polar density gives `μ'(t)`, so the integrand
/// is radial: `(2-σ) (R² ∧ t²) μ'(t) / (μ(t) t^σ)`. Below the innermost shell
/// `μ'/μ = n/t` to leading order, which integrates in closed form.
pub fn integrability_constant(m: &ManifoldModel, x: &Point, r: f64, params: &KernelParams, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let inj = m.injectivity_radius(x);
    if r >= inj - CUT_GUARD {
        return Err(Error::CutLocus { distance: r, inj });
    }
    let n = m.dim();
    let s = params.sigma;
    let unit = KernelParams { big_lambda: 1.0, ..*params };
    let tol = cfg.tail_tolerance.unwrap_or(1e-3);
    let (end, tail) = match *m {
        ManifoldModel::Sphere { curvature, .. } => (PI / curvature.sqrt(), 0.0),
        ManifoldModel::Euclidean { .. } => {
            // Tail relative to R^{2-σ}: (2-σ) 2^n R^σ / ((1 - 2^{-σ}) end^σ).
            let coef = (2.0 - s) * 2f64.powi(n as i32) / (1.0 - 2f64.powf(-s));
            let end = r * (coef / (tol * 1e-3)).powf(1.0 / s).max(cfg.far_factor);
            (end, coef * (r / end).powf(s))
        }
        ManifoldModel::Revolution { .. } => {
            let end = (cfg.far_factor * r).min(inj * (1.0 - 1e-9));
            let bound = tail_bound(n, &unit, end, 1.0) / 2.0 * r * r / r.powf(2.0 - s);
            (end, bound)
        }
    };
    if tail > tol {
        return Err(Error::Tail { bound: tail, tolerance: tol });
    }
    let levels = cfg.levels();
    let mut edges: Vec<f64> = (0..=levels).rev().map(|k| r * cfg.ratio.powi(k as i32)).collect();
    let inner_r = edges[0];
    while *edges.last().unwrap() < end {
        let next = (edges.last().unwrap() * 2.0).min(end);
        edges.push(next);
    }
    let mut nodes = Vec::new();
    for e in edges.windows(2) {
        nodes.extend(gauss_legendre_on(e[0], e[1], cfg.gauss_points));
    }
    let ts: Vec<f64> = nodes.iter().map(|p| p.0).collect();
    let vol = m.volume_fn(x, end);
    let dirs = half_directions(n, cfg.angular_nodes, cfg.angular_shift);
    let area: Vec<Vec<f64>> = dirs
        .dirs
        .par_iter()
        .map(|v| {
            let a = m.ray(x, v, &ts);
            let b = m.ray(x, &(-*v), &ts);
            a.iter().zip(&b).map(|(p, q)| p.1 + q.1).collect()
        })
        .collect();
    let mut total = KahanSum::new();
    total.add(n as f64 * (inner_r / r).powf(2.0 - s));
    for (i, &(t, w)) in nodes.iter().enumerate() {
        let mut dmu = KahanSum::new();
        for (d, wd) in area.iter().zip(&dirs.weights) {
            dmu.add(wd * d[i]);
        }
        let dmu = dmu.value() * t.powi(n as i32 - 1);
        let cap = (r * r).min(t * t);
        total.add(w * (2.0 - s) * cap * dmu / (vol.eval(t) * t.powf(s)) / r.powf(2.0 - s));
    }
    Ok(total.value())
}

/// Constant of the well-definedness bound `|Lu(x)| ≤ C Λ (‖u‖' + ‖u‖_∞) R^{-σ}`,
/// assembled from the integrability estimates for the symmetric, far-field
/// and antisymmetric parts.
pub fn well_definedness_constant(n: usize, sigma0: f64) -> f64 {
    let two_n = 2f64.powi(n as i32);
    let near = two_n * 4.0 / 3.0;
    let far = 2.0 * 2.0 * two_n / (1.0 - 2f64.powf(-sigma0));
    let anti = antisymmetric_coefficient(n) * PI * PI / 4.0;
    near + far + anti
}

/// `c_n` in `|I₂| ≤ c_n Λ ‖u‖_∞ K R^{2-σ}`, from `|J(v) - J(-v)| ≤ (n-1) K t² / 6`,
/// `|u(z) - u(x)| ≤ 2‖u‖_∞` and `μ(B_t) ≥ (2/π)^{n-1} ω_n t^n` for `√K t ≤ π/2`.
pub fn antisymmetric_coefficient(n: usize) -> f64 {
    (n as f64 - 1.0) / 6.0 * n as f64 * (PI / 2.0).powi(n as i32 - 1)
}

/// The scale-invariant norm `‖u‖_∞ + R‖∇u‖_∞ + R²‖D²u‖_∞` over `B_R(x)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PrimedNorm {
    pub sup: f64,
    pub grad: f64,
    pub hess: f64,
    pub value: f64,
}

/// Estimates the primed `C²` norm by central differences in normal
/// coordinates at `samples` quasi-uniform points of `B_R(x)`.
pub fn primed_norm(m: &ManifoldModel, u: &FieldFunction, x: &Point, r: f64, samples: usize) -> PrimedNorm {
    let n = m.dim();
    let hg = 1e-5 * r;
    let hh = 1e-4 * r;
    let pts = m.sample_ball(x, r, samples, &[]);
    let (mut sup, mut grad, mut hess) = (0.0f64, 0.0f64, 0.0f64);
    for (p, _) in &pts {
        let f = |v: &Coords| u.eval(&m.exp(p, v));
        let f0 = u.eval(p);
        sup = sup.max(f0.abs());
        let mut g2 = 0.0;
        let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let ei = Coords::basis(n, i);
            let gi = (f(&(ei * hg)) - f(&(ei * -hg))) / (2.0 * hg);
            g2 += gi * gi;
            h[(i, i)] = (f(&(ei * hh)) - 2.0 * f0 + f(&(ei * -hh))) / (hh * hh);
            for j in 0..i {
                let ej = Coords::basis(n, j);
                let pp = f(&((ei + ej) * hh));
                let pm = f(&((ei - ej) * hh));
                let mp = f(&((ej - ei) * hh));
                let mm = f(&((ei + ej) * -hh));
                let v = (pp - pm - mp + mm) / (4.0 * hh * hh);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        grad = grad.max(g2.sqrt());
        let ev = h.symmetric_eigen().eigenvalues;
        hess = hess.max(ev.iter().fold(0.0f64, |a, e| a.max(e.abs())));
    }
    PrimedNorm { sup, grad, hess, value: sup + r * grad + r * r * hess }
}

/// One row of the `σ → 2` comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sigma2Row {
    pub sigma: f64,
    pub value: f64,
    pub target: f64,
    pub relative_deviation: f64,
    pub error_bar: f64,
}

/// Model-kernel `Lu(x)` across `sigma_grid`, compared with `Δ_g u(x) / 2`.
pub fn sigma2_limit_check(
    m: &ManifoldModel,
    u: &FieldFunction,
    x: &Point,
    laplacian: f64,
    sigma_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<Sigma2Row>> {
    let target = laplacian / 2.0;
    sigma_grid
        .iter()
        .map(|&sigma| {
            let params = KernelParams::new(1.0, 1.0, sigma, sigma.min(0.5))?;
            let nu = KernelDensity::model(m, params);
            let v = evaluate_linear(&nu, u, x, cfg)?;
            let dev = if target == 0.0 { v.value.abs() } else { ((v.value - target) / target).abs() };
            Ok(Sigma2Row { sigma, value: v.value, target, relative_deviation: dev, error_bar: v.error_bar })
        })
        .collect()
}
