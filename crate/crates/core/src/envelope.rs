//! Distance-squared paraboloids, the envelope `Γ`, contact points, the
//! vertex map and the discrete ABP measurement.
//!
//! For a vertex `y ∈ B_R(z₀)` the touching paraboloid is
//! `P_y = c_y - d_y²/(2R²)` with `c_y = min_{B_{5R}} (u + d_y²/(2R²))`.
//! The minimum is taken on a quasi-uniform search grid of `B_{5R}(z₀)` and
//! then polished by a pattern search in normal coordinates at the grid
//! minimizer, so contact points are accurate well below the grid spacing.

use crate::dyadic::{CubeId, DyadicDecomposition};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::manifold::{Coords, ManifoldModel, Point};
use crate::numeric::{binomial_half_width, KahanSum};
use crate::operator::{pucci_minus, FieldFunction, QuadratureConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// `P_y(z) = c_y - d_y(z)²/(2R²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Paraboloid {
    pub vertex: Point,
    pub offset: f64,
    pub scale: f64,
}

impl Paraboloid {
    pub fn eval(&self, m: &ManifoldModel, z: &Point) -> f64 {
        let d = m.dist(&self.vertex, z);
        self.offset - d * d / (2.0 * self.scale * self.scale)
    }
}

/// A contact point `x`, its vertex `y = φ(x)` and `u(x) - Γ(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub contact: Point,
    pub vertex: Point,
    pub residual: f64,
}

/// `ρ₁ = 2(1/a₁)^{1/n} ∨ 1/δ₀` and `ρ₀` a fixed fraction of its upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbpConstants {
    pub rho0: f64,
    pub rho1: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta0: f64,
    pub a1: f64,
}

/// `ρ₀` is taken as this fraction of `2c₁δ₀/((3 + 4/ρ₁)c₂)`.
pub const RHO0_FRACTION: f64 = 0.9;

impl AbpConstants {
    pub fn new(n: usize, a1: f64, c1: f64, c2: f64, delta0: f64) -> Result<Self> {
        if !(a1 > 0.0 && a1 <= 1.0 + 1e-12) {
            return Err(Error::Config(format!("a1 must lie in (0, 1], got {a1}")));
        }
        if !(c1 > 0.0 && c2 >= 2.0 * c1) {
            return Err(Error::Config(format!("cube constants need 0 < 2c1 <= c2, got c1={c1} c2={c2}")));
        }
        let rho1 = (2.0 * (1.0 / a1).powf(1.0 / n as f64)).max(1.0 / delta0);
        let rho0 = RHO0_FRACTION * 2.0 * c1 * delta0 / ((3.0 + 4.0 / rho1) * c2);
        Ok(Self { rho0, rho1, c1, c2, delta0, a1 })
    }

    pub fn from_cubes(n: usize, a1: f64, cubes: &DyadicDecomposition) -> Result<Self> {
        let (c1, c2) = cubes
            .c1
            .zip(cubes.c2)
            .ok_or_else(|| Error::Config("cube constants are not measured; run verify first".into()))?;
        Self::new(n, a1, c1, c2, cubes.delta0)
    }

    /// `r_k = ρ₀ ρ₁^{-1/(2-σ) - k} R`.
    pub fn ring_radius(&self, sigma: f64, k: usize, r: f64) -> f64 {
        self.rho0 * self.rho1.powf(-1.0 / (2.0 - sigma) - k as f64) * r
    }
}

/// `1e-6 (1 + ‖u‖_∞)`.
pub fn contact_tolerance(u: &FieldFunction) -> f64 {
    1e-6 * (1.0 + u.global_bound)
}

/// Quasi-uniform sample of `B(center, radius)` with volume weights.
#[derive(Clone, Debug)]
pub struct SearchGrid {
    pub center: Point,
    pub radius: f64,
    pub spacing: f64,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SearchGrid {
    /// Roughly one point per `spacingⁿ` of volume.
    pub fn new(m: &ManifoldModel, center: &Point, radius: f64, spacing: f64) -> Self {
        let n = m.dim();
        let count = (crate::numeric::unit_ball_volume(n) * (radius / spacing).powi(n as i32)).ceil() as usize + 1;
        let mut points = vec![*center];
        let mut weights = vec![0.0];
        for (p, w) in m.sample_ball(center, radius, count, &[0.5, 0.5, 0.5]) {
            points.push(p);
            weights.push(w);
        }
        Self { center: *center, radius, spacing, points, weights }
    }
}

/// Unit frame directions `±e_i` at `x`, in frame components.
fn frame_steps(n: usize) -> Vec<Coords> {
    (0..n).flat_map(|i| [Coords::basis(n, i), Coords::basis(n, i) * -1.0]).collect()
}

/// Minimizes `g` starting from `x` by compass search in normal coordinates.
fn polish(m: &ManifoldModel, g: &dyn Fn(&Point) -> f64, x: Point, step: f64, min_step: f64) -> (Point, f64) {
    let dirs = frame_steps(m.dim());
    let mut best = x;
    let mut val = g(&x);
    let mut s = step;
    while s > min_step {
        let mut moved = false;
        for d in &dirs {
            let cand = m.exp(&best, &(*d * s));
            let v = g(&cand);
            if v < val {
                best = cand;
                val = v;
                moved = true;
                break;
            }
        }
        if !moved {
            s *= 0.5;
        }
    }
    (best, val)
}

/// The paraboloid with vertex `y` touching `u` from below on the grid ball.
pub fn fit_touching(m: &ManifoldModel, u: &FieldFunction, y: &Point, grid: &SearchGrid, r: f64) -> Result<(Paraboloid, ContactRecord)> {
    let scale2 = 2.0 * r * r;
    let g = |z: &Point| {
        let d = m.dist(y, z);
        u.eval(z) + d * d / scale2
    };
    let (mut bi, mut bv) = (0, f64::INFINITY);
    for (i, z) in grid.points.iter().enumerate() {
        let v = g(z);
        if v < bv {
            bi = i;
            bv = v;
        }
    }
    let edge = grid.radius - 1.5 * grid.spacing;
    let dist0 = m.dist(&grid.center, &grid.points[bi]);
    if dist0 > edge {
        return Err(Error::Localization { distance: dist0, radius: grid.radius });
    }
    let (x, c) = polish(m, &g, grid.points[bi], grid.spacing, 1e-7 * r);
    let dist = m.dist(&grid.center, &x);
    if dist >= grid.radius {
        return Err(Error::Localization { distance: dist, radius: grid.radius });
    }
    let p = Paraboloid { vertex: *y, offset: c, scale: r };
    let residual = u.eval(&x) - p.eval(m, &x);
    Ok((p, ContactRecord { contact: x, vertex: *y, residual }))
}

/// Quasi-uniform vertex net of `B_R(z₀)` with spacing `spacing`, with weights.
pub fn vertex_grid(m: &ManifoldModel, z0: &Point, r: f64, spacing: f64) -> Vec<(Point, f64)> {
    let g = SearchGrid::new(m, z0, r, spacing);
    let total: f64 = g.weights.iter().sum();
    let vol = m.ball_volume(z0, r);
    g.points.into_iter().zip(g.weights).map(|(p, w)| (p, w * vol / total)).collect()
}

/// `Γ = max_y P_y` over a finite vertex set.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub manifold: ManifoldModel,
    pub center: Point,
    pub radius: f64,
    pub paraboloids: Vec<Paraboloid>,
    /// One contact per paraboloid, with `residual = u(x) - Γ(x)`.
    pub contacts: Vec<ContactRecord>,
    /// Volume weight of each vertex in `B_R(z₀)`.
    pub vertex_weights: Vec<f64>,
}

impl Envelope {
    /// `(index, P_index(z))` of a paraboloid attaining `Γ(z)`.
    pub fn supporting(&self, z: &Point) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, p) in self.paraboloids.iter().enumerate() {
            let v = p.eval(&self.manifold, z);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    pub fn value(&self, z: &Point) -> f64 {
        self.supporting(z).1
    }

    pub fn values(&self, zs: &[Point]) -> Vec<f64> {
        zs.par_iter().map(|z| self.value(z)).collect()
    }

    /// Fitted contacts with `u - Γ ≤ tol`.
    pub fn contact_points(&self, tol: f64) -> Vec<ContactRecord> {
        self.contacts.iter().filter(|c| c.residual <= tol).copied().collect()
    }
}

/// Fits one paraboloid per vertex; the vertices must lie in `B_R(z₀)`.
pub fn build_envelope(
    m: &ManifoldModel,
    u: &FieldFunction,
    z0: &Point,
    r: f64,
    vertices: &[(Point, f64)],
    grid: &SearchGrid,
) -> Result<Envelope> {
    for (y, _) in vertices {
        if m.dist(z0, y) > r * (1.0 + 1e-12) {
            return Err(Error::Config("vertex outside B_R(z0)".into()));
        }
    }
    let fits: Vec<(Paraboloid, ContactRecord)> =
        vertices.par_iter().map(|(y, _)| fit_touching(m, u, y, grid, r)).collect::<Result<_>>()?;
    let mut env = Envelope {
        manifold: *m,
        center: *z0,
        radius: r,
        paraboloids: fits.iter().map(|f| f.0).collect(),
        contacts: Vec::new(),
        vertex_weights: vertices.iter().map(|v| v.1).collect(),
    };
    let contacts: Vec<ContactRecord> = fits
        .par_iter()
        .map(|(_, c)| ContactRecord { residual: u.eval(&c.contact) - env.value(&c.contact), ..*c })
        .collect();
    env.contacts = contacts;
    Ok(env)
}

/// Points of `points` with `u - Γ ≤ tol`, each with a supporting vertex.
pub fn contact_set(env: &Envelope, u: &FieldFunction, points: &[Point], tol: f64) -> Vec<ContactRecord> {
    points
        .par_iter()
        .filter_map(|x| {
            let (i, g) = env.supporting(x);
            let residual = u.eval(x) - g;
            (residual <= tol).then(|| ContactRecord { contact: *x, vertex: env.paraboloids[i].vertex, residual })
        })
        .collect()
}

/// Frame-component gradient of `u` at `x` by central differences.
pub fn gradient(m: &ManifoldModel, u: &FieldFunction, x: &Point, h: f64) -> Coords {
    let n = m.dim();
    let mut g = Coords::zeros(n);
    for i in 0..n {
        let e = Coords::basis(n, i) * h;
        g[i] = (u.eval(&m.exp(x, &e)) - u.eval(&m.exp(x, &(e * -1.0)))) / (2.0 * h);
    }
    g
}

/// `φ(x) = exp_x(R² ∇u(x))`.
pub fn grad_map(m: &ManifoldModel, u: &FieldFunction, x: &Point, r: f64) -> Result<Point> {
    let v = gradient(m, u, x, 1e-4 * r) * (r * r);
    let len = v.norm();
    let inj = m.injectivity_radius(x);
    if len >= inj {
        return Err(Error::CutLocus { distance: len, inj });
    }
    Ok(m.exp(x, &v))
}

/// `(1-t) f(z₁) + t f(z₂) - f(z)` with `z₁ = exp_z(tξ)` and `z₂ = exp_z(-(1-t)ξ)`.
pub fn convexity_defect(m: &ManifoldModel, f: &dyn Fn(&Point) -> f64, z: &Point, xi: &Coords, t: f64) -> Result<f64> {
    let len = xi.norm();
    let inj = m.injectivity_radius(z);
    if len >= inj {
        return Err(Error::CutLocus { distance: len, inj });
    }
    let z1 = m.exp(z, &(*xi * t));
    let z2 = m.exp(z, &(*xi * -(1.0 - t)));
    Ok((1.0 - t) * f(&z1) + t * f(&z2) - f(z))
}

/// Parameters of the good-ring search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingConfig {
    pub c0: f64,
    pub samples: usize,
    pub k_cap: usize,
}

impl Default for RingConfig {
    fn default() -> Self {
        Self { c0: 1.0, samples: 4096, k_cap: 12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingStats {
    pub k: usize,
    pub radius: f64,
    /// `μ(G_k)/μ(R_k)` from weighted samples.
    pub bad_fraction: f64,
    pub allowed_fraction: f64,
    pub half_width: f64,
}

/// Weighted samples of `B(x, outer) \ B(x, inner)`.
fn ring_samples(m: &ManifoldModel, x: &Point, inner: f64, outer: f64, count: usize) -> Vec<(Point, f64)> {
    m.sample_ball(x, outer, count, &[0.3, 0.6, 0.9])
        .into_iter()
        .filter(|(z, _)| m.dist(x, z) >= inner)
        .collect()
}

/// Smallest `k ≤ k_cap` with `μ(G_k) ≤ (C₀/M₀)(Λ + R^σ f)₊ μ(R_k)`, where
/// `G_k = {z ∈ R_k : u > P_y + M₀(r_k/R)²}`. Excesses below the roundoff of
/// `u(z) - P_y(z)` are not counted.
pub fn good_ring_search(
    m: &ManifoldModel,
    u: &FieldFunction,
    contact: &ContactRecord,
    m0: f64,
    f_val: f64,
    params: &KernelParams,
    consts: &AbpConstants,
    r: f64,
    cfg: &RingConfig,
) -> Result<(usize, Vec<RingStats>)> {
    let x = &contact.contact;
    let d = m.dist(x, &contact.vertex);
    let p = Paraboloid { vertex: contact.vertex, offset: u.eval(x) + d * d / (2.0 * r * r), scale: r };
    let allowed = cfg.c0 / m0 * (params.big_lambda + r.powf(params.sigma) * f_val).max(0.0);
    let mut stats = Vec::new();
    for k in 0..=cfg.k_cap {
        let rk = consts.ring_radius(params.sigma, k, r);
        let rk1 = consts.ring_radius(params.sigma, k + 1, r);
        let thresh = m0 * (rk / r).powi(2);
        let pts = ring_samples(m, x, rk1, rk, cfg.samples);
        if pts.is_empty() {
            return Err(Error::Domain { margin: rk, required: f64::EPSILON * (1.0 + x.coords.norm()) });
        }
        let (mut bad, mut total) = (KahanSum::new(), KahanSum::new());
        for (z, w) in &pts {
            let (uz, pz) = (u.eval(z), p.eval(m, z));
            let floor = 8.0 * f64::EPSILON * (uz.abs() + pz.abs());
            if uz - pz > thresh + floor {
                bad.add(*w);
            }
            total.add(*w);
        }
        let frac = bad.value() / total.value();
        stats.push(RingStats {
            k,
            radius: rk,
            bad_fraction: frac,
            allowed_fraction: allowed,
            half_width: binomial_half_width(frac, pts.len()),
        });
        if frac <= allowed {
            return Ok((k, stats));
        }
    }
    Err(Error::SearchExhausted { k_cap: cfg.k_cap })
}

/// Outcome of the flatness property on one ring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessCheck {
    /// Fraction of `B_r \ B_{r/2}` where `Γ > P_y + h`.
    pub annulus_fraction: f64,
    pub applies: bool,
    /// `max_{B_{r/2}} (Γ - P_y - h - (r/R)²/2)`; nonpositive when flat.
    pub max_excess: f64,
    pub pass: bool,
}

/// If `Γ > P_y + h` on at most an `ε₀` fraction of the annulus, checks
/// `Γ ≤ P_y + h + (r/R)²/2` on the inner half ball.
pub fn flatness_check(env: &Envelope, contact: &ContactRecord, rr: f64, h: f64, eps0: f64, samples: usize) -> FlatnessCheck {
    let m = &env.manifold;
    let x = &contact.contact;
    let r = env.radius;
    let idx = env.paraboloids.iter().position(|p| p.vertex == contact.vertex);
    let p = idx.map(|i| env.paraboloids[i]).unwrap_or(Paraboloid { vertex: contact.vertex, offset: env.value(x) + m.dist(x, &contact.vertex).powi(2) / (2.0 * r * r), scale: r });
    let ring = ring_samples(m, x, rr / 2.0, rr, samples);
    let (mut above, mut total) = (0.0, 0.0);
    for (z, w) in &ring {
        if env.value(z) > p.eval(m, z) + h {
            above += w;
        }
        total += w;
    }
    let annulus_fraction = above / total;
    let applies = annulus_fraction <= eps0;
    let bound = h + 0.5 * (rr / r).powi(2);
    let max_excess = m
        .sample_ball(x, rr / 2.0, samples, &[0.1, 0.2, 0.3])
        .par_iter()
        .map(|(z, _)| env.value(z) - p.eval(m, z) - bound)
        .reduce(|| f64::NEG_INFINITY, f64::max);
    FlatnessCheck { annulus_fraction, applies, max_excess, pass: !applies || max_excess <= 1e-12 }
}

/// `(d(y*, y), |exp_z⁻¹ y* - exp_z⁻¹ y|)`.
pub fn vertex_contraction(m: &ManifoldModel, z: &Point, y_star: &Point, y: &Point) -> Result<(f64, f64)> {
    let a = m.log(z, y_star)?;
    let b = m.log(z, y)?;
    Ok((m.dist(y_star, y), (a.comps - b.comps).norm()))
}

/// Checks the vertex contraction on `pairs` triples `(z, y*, y)` with
/// `z ∈ B_{5R}(z₀)` and `y*, y ∈ B_R(z₀)`. Returns `(violations, worst ratio)`.
pub fn contraction_trials(m: &ManifoldModel, z0: &Point, r: f64, pairs: usize) -> Result<(usize, f64)> {
    let zs = m.sample_ball(z0, 5.0 * r, pairs, &[0.11, 0.37, 0.71]);
    let ys = m.sample_ball(z0, r, 2 * pairs, &[0.23, 0.59, 0.83]);
    let out: Vec<(f64, f64)> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            // pair vertices far apart in the stream so they are not neighbours
            let (a, b) = (&ys[i].0, &ys[(i + pairs) % ys.len()].0);
            vertex_contraction(m, &zs[i].0, a, b)
        })
        .collect::<Result<_>>()?;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for (lhs, rhs) in out {
        if lhs > rhs + 1e-8 * (1.0 + rhs) {
            violations += 1;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    Ok((violations, worst))
}

/// Budgets and spacings of the ABP measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbpConfig {
    /// Vertex net spacing over `R`.
    pub vertex_spacing: f64,
    /// Search grid spacing over `R`.
    pub search_spacing: f64,
    pub measure_samples: usize,
    pub occupancy_cubes: usize,
    pub occupancy_samples: usize,
    /// Constant in the occupancy level `u ≤ Γ + C R⁻² (Λ + R^σ max f)₊ d²`.
    pub occupancy_constant: f64,
    pub contraction_pairs: usize,
    /// Grid points used to verify `M⁻u ≤ f`.
    pub f_grid: usize,
}

impl Default for AbpConfig {
    fn default() -> Self {
        Self {
            vertex_spacing: 1.0 / 32.0,
            search_spacing: 1.0 / 16.0,
            measure_samples: 200_000,
            occupancy_cubes: 200,
            occupancy_samples: 64,
            occupancy_constant: 1.0,
            contraction_pairs: 10_000,
            f_grid: 1000,
        }
    }
}

/// Envelope, contact set and cube measures; independent of `σ`.
#[derive(Clone, Debug)]
pub struct AbpSetup {
    pub envelope: Envelope,
    pub contacts: Vec<ContactRecord>,
    pub ball_volume: f64,
    pub generation: i32,
    /// Cubes of the cover with their sampled measure.
    pub cover: BTreeMap<usize, f64>,
    /// Sample points of each cover cube, for `max_Q f`.
    cube_points: BTreeMap<usize, Vec<Point>>,
    pub uncovered_contacts: usize,
    pub min_contact_residual: f64,
}

/// Checks the hypotheses, builds the envelope and the cube cover.
pub fn abp_setup(
    m: &ManifoldModel,
    u: &FieldFunction,
    z0: &Point,
    r: f64,
    cubes: &DyadicDecomposition,
    cfg: &AbpConfig,
) -> Result<AbpSetup> {
    let inj = m.injectivity_radius(z0);
    let k = m.curvature_bound();
    let limit = if k > 0.0 { inj.min(std::f64::consts::PI / k.sqrt()) } else { inj };
    if 15.0 * r >= limit {
        return Err(Error::Config(format!("15R = {} must be below inj ∧ π/√K = {limit}", 15.0 * r)));
    }
    if cubes.manifold.dist(&cubes.center, z0) > 1e-12 || cubes.radius < 5.0 * r {
        return Err(Error::Config("cubes must decompose a ball around z0 of radius at least 5R".into()));
    }
    let grid = SearchGrid::new(m, z0, 5.0 * r, cfg.search_spacing * r);
    let inf2 = grid
        .points
        .iter()
        .filter(|p| m.dist(z0, p) < 2.0 * r)
        .map(|p| u.eval(p))
        .fold(f64::INFINITY, f64::min);
    if inf2 > 1.0 {
        return Err(Error::Config(format!("inf of u over B_2R is {inf2} > 1")));
    }
    let vertices = vertex_grid(m, z0, r, cfg.vertex_spacing * r);
    let envelope = build_envelope(m, u, z0, r, &vertices, &grid)?;
    let tol = contact_tolerance(u);
    let contacts = envelope.contact_points(tol);
    let generation = cubes.j_max;

    let mut cover: BTreeMap<usize, f64> = BTreeMap::new();
    let mut uncovered = 0;
    for c in &contacts {
        match cubes.locate(&c.contact, generation) {
            Ok(id) => {
                cover.insert(id.index, 0.0);
            }
            Err(_) => uncovered += 1,
        }
    }
    let mut cube_points: BTreeMap<usize, Vec<Point>> = cover.keys().map(|&i| (i, vec![*cubes.center_of(CubeId { generation, index: i })])).collect();
    let samples = m.sample_ball(z0, cubes.radius, cfg.measure_samples, &[0.41, 0.13, 0.67]);
    let located: Vec<Option<usize>> = samples.par_iter().map(|(p, _)| cubes.locate(p, generation).ok().map(|id| id.index)).collect();
    for ((p, w), id) in samples.iter().zip(located) {
        if let Some(i) = id {
            if let Some(mu) = cover.get_mut(&i) {
                *mu += w;
                cube_points.get_mut(&i).unwrap().push(*p);
            }
        }
    }
    for c in &contacts {
        if let Ok(id) = cubes.locate(&c.contact, generation) {
            cube_points.get_mut(&id.index).unwrap().push(c.contact);
        }
    }
    let min_contact_residual = envelope.contacts.iter().map(|c| c.residual).fold(f64::INFINITY, f64::min);
    Ok(AbpSetup {
        ball_volume: m.ball_volume(z0, r),
        envelope,
        contacts,
        generation,
        cover,
        cube_points,
        uncovered_contacts: uncovered,
        min_contact_residual,
    })
}

/// Largest `M⁻u` (plus its error bar) over a grid of `B(z₀, radius)`.
pub fn pucci_minus_sup(
    m: &ManifoldModel,
    params: &KernelParams,
    u: &FieldFunction,
    z0: &Point,
    radius: f64,
    count: usize,
    qcfg: &QuadratureConfig,
) -> Result<f64> {
    let pts = m.sample_ball(z0, radius, count, &[0.7, 0.2, 0.4]);
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|(p, _)| pucci_minus(m, params, u, p, qcfg).map(|v| v.value + v.error_bar))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// One `σ` of the discrete ABP measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbpReport {
    pub sigma: f64,
    pub ball_volume: f64,
    pub rhs_sum: f64,
    /// `μ(B_R) / Σ (Λ + R^σ max_Q f)₊ⁿ μ(Q)`.
    pub c_emp: f64,
    pub contacts: usize,
    pub cover_cubes: usize,
    pub cover_generation: i32,
    /// Generation whose diameter bound `c₂δ₀^j ≤ ρ₀ρ₁^{-1/(2-σ)}R` holds.
    pub required_generation: i32,
    pub diameter_bound_met: bool,
    pub uncovered_contacts: usize,
    /// Grid points where `M⁻u > f`.
    pub f_violations: usize,
    /// `min_Q` of the occupancy ratio over the sampled cover cubes.
    pub occupancy_min: f64,
    pub occupancy_cubes: usize,
}

/// Evaluates both sides of the key estimate for one `σ`.
pub fn abp_evaluate(
    setup: &AbpSetup,
    u: &FieldFunction,
    f: &FieldFunction,
    params: &KernelParams,
    cubes: &DyadicDecomposition,
    consts: &AbpConstants,
    cfg: &AbpConfig,
    qcfg: &QuadratureConfig,
) -> Result<AbpReport> {
    let env = &setup.envelope;
    let m = &env.manifold;
    let (z0, r) = (env.center, env.radius);
    let n = m.dim() as i32;
    let rs = r.powf(params.sigma);

    let grid = m.sample_ball(&z0, 5.0 * r, cfg.f_grid, &[0.7, 0.2, 0.4]);
    let f_violations = grid
        .par_iter()
        .map(|(p, _)| pucci_minus(m, params, u, p, qcfg).map(|v| usize::from(v.value - v.error_bar > f.eval(p))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();

    let weight = |i: usize| {
        let fmax = setup.cube_points[&i].iter().map(|p| f.eval(p)).fold(f64::NEG_INFINITY, f64::max);
        (params.big_lambda + rs * fmax).max(0.0)
    };
    let mut rhs = KahanSum::new();
    for (&i, &mu) in &setup.cover {
        rhs.add(weight(i).powi(n) * mu);
    }
    let rhs_sum = rhs.value();

    let r0 = consts.ring_radius(params.sigma, 0, r);
    let required_generation = ((r0 / consts.c2).ln() / consts.delta0.ln() - 1e-12).ceil() as i32;

    let scale = cubes.scale(setup.generation);
    let diam = consts.c2 * scale;
    let reach = (1.0 + 4.0 / consts.rho1) * diam;
    let chosen: Vec<usize> = setup.cover.keys().copied().take(cfg.occupancy_cubes).collect();
    let occ: Vec<f64> = chosen
        .par_iter()
        .map(|&i| {
            let level = cfg.occupancy_constant / (r * r) * weight(i) * diam * diam;
            let zc = cubes.center_of(CubeId { generation: setup.generation, index: i });
            let pts = m.sample_ball(zc, reach, cfg.occupancy_samples, &[0.5, 0.25, 0.75]);
            let good: f64 = pts.iter().filter(|(z, _)| u.eval(z) <= env.value(z) + level).map(|(_, w)| w).sum();
            let mu = setup.cover[&i];
            if mu > 0.0 {
                good / mu
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let occupancy_min = occ.iter().copied().fold(f64::INFINITY, f64::min);

    Ok(AbpReport {
        sigma: params.sigma,
        ball_volume: setup.ball_volume,
        rhs_sum,
        c_emp: setup.ball_volume / rhs_sum,
        contacts: setup.contacts.len(),
        cover_cubes: setup.cover.len(),
        cover_generation: setup.generation,
        required_generation,
        diameter_bound_met: setup.generation >= required_generation,
        uncovered_contacts: setup.uncovered_contacts,
        f_violations,
        occupancy_min,
        occupancy_cubes: chosen.len(),
    })
}

/// Distinct cubes hit by a point list at generation `j`.
pub fn cubes_hit(cubes: &DyadicDecomposition, pts: &[Point], j: i32) -> BTreeSet<usize> {
    pts.iter().filter_map(|p| cubes.locate(p, j).ok()).map(|id| id.index).collect()
}
