//! Closed-form differential geometry of the model manifolds: Euclidean space,
//! round spheres of curvature `K`, and convex surfaces of revolution.

mod coords;
pub mod report;
pub mod revolution;

pub use coords::{Coords, Point, TangentVector, MAX_COORDS};
pub use report::GeometryReport;
pub use revolution::Profile;

use crate::error::{Error, Result};
use crate::numeric::{cube_to_ball, gauss_legendre_on, halton, sphere_directions, unit_ball_volume};
use nalgebra::DMatrix;
use revolution::GraphSurface;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Margin kept between a query distance and the injectivity radius.
pub const CUT_GUARD: f64 = 1e-9;

/// Default finite-difference step for Hessians, relative to the unit scale.
pub const HESSIAN_STEP: f64 = 1e-4;

/// Number of 2-plane samples used for curvature suprema on non-space-forms.
pub const CURVATURE_SAMPLES: usize = 10_000;

/// A model manifold with nonnegative sectional curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ManifoldModel {
    Euclidean { dim: usize },
    Sphere { dim: usize, curvature: f64 },
    Revolution { profile: Profile },
}

/// Sampled curvature supremum together with the sampling resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureSup {
    pub value: f64,
    pub samples: usize,
    /// Covering radius of the sample set in the region.
    pub resolution: f64,
}

impl ManifoldModel {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Config(format!("Euclidean dimension {dim} not in 2..=3")));
        }
        Ok(ManifoldModel::Euclidean { dim })
    }

    pub fn sphere(dim: usize, curvature: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Config(format!("sphere dimension {dim} not in 2..=3")));
        }
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::Config(format!("sphere curvature must be positive, got {curvature}")));
        }
        Ok(ManifoldModel::Sphere { dim, curvature })
    }

    pub fn revolution(profile: Profile) -> Self {
        ManifoldModel::Revolution { profile }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ManifoldModel::Euclidean { dim } | ManifoldModel::Sphere { dim, .. } => dim,
            ManifoldModel::Revolution { .. } => 2,
        }
    }

    /// Length of the coordinate vector of a point.
    pub fn coord_len(&self) -> usize {
        match *self {
            ManifoldModel::Sphere { dim, .. } => dim + 1,
            _ => self.dim(),
        }
    }

    /// Canonical base point: the origin, the north pole, or the apex.
    pub fn origin(&self) -> Point {
        let mut c = Coords::zeros(self.coord_len());
        if let ManifoldModel::Sphere { dim, .. } = *self {
            c[dim] = 1.0;
        }
        Point::new(c)
    }

    /// Validates chart coordinates as a point of the manifold.
    pub fn point(&self, xs: &[f64]) -> Result<Point> {
        if xs.len() != self.coord_len() {
            return Err(Error::Config(format!(
                "expected {} coordinates, got {}",
                self.coord_len(),
                xs.len()
            )));
        }
        let p = Point::from_slice(xs);
        if !p.coords.is_finite() {
            return Err(Error::Config("point has non-finite coordinates".into()));
        }
        if let ManifoldModel::Sphere { .. } = self {
            if (p.coords.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config("sphere points must be unit vectors".into()));
            }
        }
        Ok(p)
    }

    /// Whether `p` satisfies the chart invariant within `1e-12`.
    pub fn contains(&self, p: &Point) -> bool {
        p.coords.len() == self.coord_len()
            && p.coords.is_finite()
            && match self {
                ManifoldModel::Sphere { .. } => (p.coords.norm() - 1.0).abs() <= 1e-12,
                _ => true,
            }
    }

    /// Orthonormal frame of `T_x M`, as vectors in the chart/ambient coordinates.
    pub fn frame(&self, x: &Point) -> Vec<Coords> {
        match *self {
            ManifoldModel::Euclidean { dim } => (0..dim).map(|i| Coords::basis(dim, i)).collect(),
            ManifoldModel::Sphere { dim, .. } => sphere_frame(&x.coords, dim),
            ManifoldModel::Revolution { profile } => {
                let e = GraphSurface { profile }.frame(&x.coords);
                vec![Coords::from_slice(&e[0]), Coords::from_slice(&e[1])]
            }
        }
    }

    pub fn tangent(&self, x: &Point, comps: &[f64]) -> TangentVector {
        assert_eq!(comps.len(), self.dim(), "tangent components must match the dimension");
        TangentVector::new(*x, Coords::from_slice(comps))
    }

    fn to_ambient(&self, x: &Point, comps: &Coords) -> Coords {
        let frame = self.frame(x);
        let mut out = Coords::zeros(self.coord_len());
        for (i, e) in frame.iter().enumerate() {
            out = out.axpy(comps[i], e);
        }
        out
    }

    /// `exp_x(v)` for frame components `v` at `x`.
    pub fn exp(&self, x: &Point, v: &Coords) -> Point {
        match *self {
            ManifoldModel::Euclidean { .. } => Point::new(x.coords + *v),
            ManifoldModel::Sphere { curvature, .. } => {
                let len = v.norm();
                if len == 0.0 {
                    return *x;
                }
                let th = curvature.sqrt() * len;
                let dir = self.to_ambient(x, v) * (1.0 / len);
                let z = (x.coords * th.cos()).axpy(th.sin(), &dir);
                Point::new(z * (1.0 / z.norm()))
            }
            ManifoldModel::Revolution { profile } => {
                Point::new(GraphSurface { profile }.exp(&x.coords, v))
            }
        }
    }

    /// `exp` of a tangent vector based at its own base point.
    pub fn exp_vec(&self, xi: &TangentVector) -> Point {
        self.exp(&xi.base, &xi.comps)
    }

    /// `exp_x^{-1}(z)`, defined strictly inside the injectivity radius.
    pub fn log(&self, x: &Point, z: &Point) -> Result<TangentVector> {
        let inj = self.injectivity_radius(x);
        match *self {
            ManifoldModel::Euclidean { .. } => Ok(TangentVector::new(*x, z.coords - x.coords)),
            ManifoldModel::Sphere { dim, curvature } => {
                let th = sphere_angle(&x.coords, &z.coords);
                let d = th / curvature.sqrt();
                if d >= inj - CUT_GUARD {
                    return Err(Error::CutLocus { distance: d, inj });
                }
                if th == 0.0 {
                    return Ok(TangentVector::zero(*x, dim));
                }
                let half = (0.5 * th).sin();
                let w = (z.coords - x.coords).axpy(2.0 * half * half, &x.coords);
                let wn = w.norm();
                let frame = sphere_frame(&x.coords, dim);
                let mut comps = Coords::zeros(dim);
                for (i, e) in frame.iter().enumerate() {
                    comps[i] = e.dot(&w) / wn * d;
                }
                Ok(TangentVector::new(*x, comps))
            }
            ManifoldModel::Revolution { profile } => {
                let g = GraphSurface { profile };
                match g.shoot(&x.coords, &z.coords) {
                    Some(xi) => {
                        let d = xi.norm();
                        if d >= inj - CUT_GUARD {
                            Err(Error::CutLocus { distance: d, inj })
                        } else {
                            Ok(TangentVector::new(*x, xi))
                        }
                    }
                    None => Err(Error::CutLocus {
                        distance: g.chart_segment_length(&x.coords, &z.coords),
                        inj,
                    }),
                }
            }
        }
    }

    /// Riemannian distance.
    ///
    /// On surfaces of revolution this is the length of the shooting geodesic,
    /// which is minimizing inside the certified injectivity radius; if shooting
    /// fails the metric length of the chart segment is returned.
    pub fn dist(&self, x: &Point, z: &Point) -> f64 {
        match *self {
            ManifoldModel::Euclidean { .. } => x.coords.dist(&z.coords),
            ManifoldModel::Sphere { curvature, .. } => {
                sphere_angle(&x.coords, &z.coords) / curvature.sqrt()
            }
            ManifoldModel::Revolution { profile } => {
                let g = GraphSurface { profile };
                match g.shoot(&x.coords, &z.coords) {
                    Some(xi) => xi.norm().min(g.chart_segment_length(&x.coords, &z.coords)),
                    None => g.chart_segment_length(&x.coords, &z.coords),
                }
            }
        }
    }

    /// Geodesic point reflection `exp_x(-exp_x^{-1} z)`.
    pub fn reflect(&self, x: &Point, z: &Point) -> Result<Point> {
        match *self {
            ManifoldModel::Euclidean { .. } => Ok(Point::new(x.coords * 2.0 - z.coords)),
            ManifoldModel::Sphere { curvature, .. } => {
                let d = sphere_angle(&x.coords, &z.coords) / curvature.sqrt();
                let inj = self.injectivity_radius(x);
                if d >= inj - CUT_GUARD {
                    return Err(Error::CutLocus { distance: d, inj });
                }
                let r = (x.coords * (2.0 * x.coords.dot(&z.coords))) - z.coords;
                Ok(Point::new(r * (1.0 / r.norm())))
            }
            ManifoldModel::Revolution { .. } => {
                let xi = self.log(x, z)?;
                Ok(self.exp(x, &(-xi.comps)))
            }
        }
    }

    /// `μ_g(B(x, r))`.
    pub fn ball_volume(&self, x: &Point, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match *self {
            ManifoldModel::Euclidean { dim } => unit_ball_volume(dim) * r.powi(dim as i32),
            ManifoldModel::Sphere { dim, curvature } => sphere_cap_volume(dim, curvature, r),
            ManifoldModel::Revolution { .. } => {
                let dirs = sphere_directions(2, 64, 0.5);
                let mut ts = Vec::new();
                let mut ws = Vec::new();
                let panels = 6;
                for k in 0..panels {
                    let a = r * k as f64 / panels as f64;
                    let b = r * (k + 1) as f64 / panels as f64;
                    for (t, w) in gauss_legendre_on(a, b, 8) {
                        ts.push(t);
                        ws.push(w);
                    }
                }
                let mut total = 0.0;
                for d in &dirs {
                    let dir = Coords::from_slice(&d[..2]);
                    let ray = self.ray(x, &dir, &ts);
                    for ((_, jac), (t, w)) in ray.iter().zip(ts.iter().zip(&ws)) {
                        total += w * jac * t;
                    }
                }
                total * 2.0 * PI / dirs.len() as f64
            }
        }
    }

    /// Polar volume density `J(t, v)` with `dV = J t^{n-1} dv dt`.
    pub fn exp_jacobian(&self, x: &Point, t: f64, v: &Coords) -> Result<f64> {
        let inj = self.injectivity_radius(x);
        if t >= inj - CUT_GUARD {
            return Err(Error::CutLocus { distance: t, inj });
        }
        Ok(match *self {
            ManifoldModel::Euclidean { .. } => 1.0,
            ManifoldModel::Sphere { dim, curvature } => sphere_density(dim, curvature, t),
            ManifoldModel::Revolution { .. } => {
                let dir = *v * (1.0 / v.norm());
                self.ray(x, &dir, &[t])[0].1
            }
        })
    }

    /// Points `exp_x(t v)` and densities `J(t, v)` along the ray with unit
    /// direction `v`, for ascending `ts`.
    pub fn ray(&self, x: &Point, v: &Coords, ts: &[f64]) -> Vec<(Point, f64)> {
        match *self {
            ManifoldModel::Euclidean { .. } => {
                ts.iter().map(|&t| (Point::new(x.coords.axpy(t, v)), 1.0)).collect()
            }
            ManifoldModel::Sphere { dim, curvature } => {
                let dir = self.to_ambient(x, v);
                let dir = dir * (1.0 / dir.norm());
                let k = curvature.sqrt();
                ts.iter()
                    .map(|&t| {
                        let z = (x.coords * (k * t).cos()).axpy((k * t).sin(), &dir);
                        (Point::new(z * (1.0 / z.norm())), sphere_density(dim, curvature, t))
                    })
                    .collect()
            }
            ManifoldModel::Revolution { profile } => GraphSurface { profile }
                .ray(&x.coords, v, ts, revolution::MAX_STEP)
                .into_iter()
                .map(|(c, j)| (Point::new(c), j))
                .collect(),
        }
    }

    /// Injectivity radius (closed form) or a certified lower bound.
    pub fn injectivity_radius(&self, x: &Point) -> f64 {
        match *self {
            ManifoldModel::Euclidean { .. } => f64::INFINITY,
            ManifoldModel::Sphere { curvature, .. } => PI / curvature.sqrt(),
            ManifoldModel::Revolution { profile } => {
                let g = GraphSurface { profile };
                let rho = x.coords.norm();
                if rho < 1e-12 {
                    f64::INFINITY
                } else {
                    propagate_injectivity(f64::INFINITY, g.conjugate_bound(), g.meridian_length(rho))
                        .max(0.0)
                }
            }
        }
    }

    /// Conjugate radius (closed form) or the lower bound `π / sqrt(K_max)`.
    pub fn conjugate_radius(&self, _x: &Point) -> f64 {
        match *self {
            ManifoldModel::Euclidean { .. } => f64::INFINITY,
            ManifoldModel::Sphere { curvature, .. } => PI / curvature.sqrt(),
            ManifoldModel::Revolution { profile } => GraphSurface { profile }.conjugate_bound(),
        }
    }

    /// Sectional curvature at `x` (the Gauss curvature for surfaces).
    pub fn curvature_at(&self, x: &Point) -> f64 {
        match *self {
            ManifoldModel::Euclidean { .. } => 0.0,
            ManifoldModel::Sphere { curvature, .. } => curvature,
            ManifoldModel::Revolution { profile } => profile.gauss_curvature(x.coords.norm()),
        }
    }

    /// Global curvature supremum of the model.
    pub fn curvature_bound(&self) -> f64 {
        match *self {
            ManifoldModel::Euclidean { .. } => 0.0,
            ManifoldModel::Sphere { curvature, .. } => curvature,
            ManifoldModel::Revolution { profile } => profile.curvature_max(),
        }
    }

    /// Supremum of sectional curvatures over 2-planes in `B(center, radius)`.
    ///
    /// Exact for space forms. For surfaces of revolution the chart disc of the
    /// same radius, which contains the geodesic ball since `g ≥ I`, is sampled
    /// at [`CURVATURE_SAMPLES`] Halton points.
    pub fn sectional_curvature_sup(&self, center: &Point, radius: f64) -> CurvatureSup {
        match *self {
            ManifoldModel::Euclidean { .. } | ManifoldModel::Sphere { .. } => CurvatureSup {
                value: self.curvature_bound(),
                samples: 1,
                resolution: 0.0,
            },
            ManifoldModel::Revolution { profile } => {
                let n = CURVATURE_SAMPLES;
                let mut best = profile.gauss_curvature(center.coords.norm());
                for i in 0..n {
                    let u = halton(i as u64, 2, &[]);
                    let b = cube_to_ball(&u, 2);
                    let p = center.coords.axpy(radius, &Coords::from_slice(&b[..2]));
                    best = best.max(profile.gauss_curvature(p.norm()));
                }
                CurvatureSup {
                    value: best,
                    samples: n + 1,
                    resolution: radius * (PI / n as f64).sqrt(),
                }
            }
        }
    }

    /// Finite-difference Hessian of `d_y^2 / 2` at `x`, in the frame at `x`.
    pub fn dist_squared_hessian(&self, y: &Point, x: &Point) -> Result<DMatrix<f64>> {
        self.dist_squared_hessian_with_step(y, x, HESSIAN_STEP)
    }

    pub fn dist_squared_hessian_with_step(&self, y: &Point, x: &Point, h: f64) -> Result<DMatrix<f64>> {
        let d = self.dist(x, y);
        let k = self.curvature_bound();
        let limit = if k > 0.0 {
            self.injectivity_radius(y).min(PI / (2.0 * k.sqrt()))
        } else {
            self.injectivity_radius(y)
        };
        if d >= limit - CUT_GUARD {
            return Err(Error::CutLocus { distance: d, inj: limit });
        }
        let n = self.dim();
        let f = |v: Coords| {
            let z = self.exp(x, &v);
            0.5 * self.dist(y, &z).powi(2)
        };
        let f0 = f(Coords::zeros(n));
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let ei = Coords::basis(n, i) * h;
            hess[(i, i)] = (f(ei) - 2.0 * f0 + f(-ei)) / (h * h);
            for j in 0..i {
                let ej = Coords::basis(n, j) * h;
                let v = (f(ei + ej) - f(ei - ej) - f(ej - ei) + f(-(ei + ej))) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        Ok(hess)
    }

    /// Quasi-uniform sample of `B(center, radius)` with quadrature weights
    /// summing to an estimate of its volume. `radius` must stay below the
    /// injectivity radius of `center`.
    pub fn sample_ball(&self, center: &Point, radius: f64, count: usize, shift: &[f64]) -> Vec<(Point, f64)> {
        let n = self.dim();
        let base = unit_ball_volume(n) * radius.powi(n as i32) / count as f64;
        (0..count)
            .map(|i| {
                let u = halton(i as u64, n, shift);
                let b = cube_to_ball(&u, n);
                let v = Coords::from_slice(&b[..n]) * radius;
                let t = v.norm();
                if t == 0.0 {
                    return (*center, base);
                }
                let (p, jac) = self.ray(center, &(v * (1.0 / t)), &[t])[0];
                (p, base * jac)
            })
            .collect()
    }

    /// Ball-volume evaluator around `x`, valid for radii up to `t_max`.
    pub fn volume_fn(&self, x: &Point, t_max: f64) -> VolumeFn {
        match *self {
            ManifoldModel::Euclidean { dim } => VolumeFn::Euclidean { dim },
            ManifoldModel::Sphere { dim, curvature } => VolumeFn::Sphere { dim, curvature },
            ManifoldModel::Revolution { .. } => VolumeFn::table(self, x, t_max),
        }
    }
}

/// `min(inj(z0), conj(x)) - d(x, z0)`, the propagated injectivity lower bound.
pub fn propagate_injectivity(inj_z0: f64, conj_x: f64, d_x_z0: f64) -> f64 {
    inj_z0.min(conj_x) - d_x_z0
}

/// Lower bound on `inj(x)` for `x` near a base point `z0`, using
/// `conj(x) ≥ π/√K ∧ (inj(z0) - d)` for the conjugate radius.
pub fn injectivity_near(inj_z0: f64, k_max: f64, d_x_z0: f64) -> f64 {
    let conj_space = if k_max > 0.0 { PI / k_max.sqrt() } else { f64::INFINITY };
    let conj = conj_space.min(inj_z0 - d_x_z0);
    propagate_injectivity(inj_z0, conj, d_x_z0)
}

fn sphere_angle(x: &Coords, z: &Coords) -> f64 {
    2.0 * (*x - *z).norm().atan2((*x + *z).norm())
}

fn sphere_frame(x: &Coords, dim: usize) -> Vec<Coords> {
    let m = dim + 1;
    let w = *x - Coords::basis(m, dim);
    let wn2 = w.norm_sq();
    (0..dim)
        .map(|i| {
            let e = Coords::basis(m, i);
            if wn2 < 1e-30 {
                e
            } else {
                e.axpy(-2.0 * w[i] / wn2, &w)
            }
        })
        .collect()
}

fn sphere_density(dim: usize, curvature: f64, t: f64) -> f64 {
    let s = curvature.sqrt() * t;
    if s < 1e-8 {
        return 1.0;
    }
    (s.sin() / s).max(0.0).powi(dim as i32 - 1)
}

fn sphere_cap_volume(dim: usize, curvature: f64, r: f64) -> f64 {
    let k = curvature.sqrt();
    let th = (k * r).min(PI);
    match dim {
        2 => 2.0 * PI * (1.0 - th.cos()) / curvature,
        3 => PI * (2.0 * th - (2.0 * th).sin()) / (curvature * k),
        _ => unreachable!("sphere dimension is validated at construction"),
    }
}

/// Ball-volume evaluator: closed forms, or an interpolated table built from
/// rays for surfaces of revolution.
#[derive(Clone, Debug)]
pub enum VolumeFn {
    Euclidean { dim: usize },
    Sphere { dim: usize, curvature: f64 },
    Table { step: f64, ratio: Vec<f64> },
}

impl VolumeFn {
    const TABLE_ANGLES: usize = 48;
    const TABLE_POINTS: usize = 512;

    fn table(m: &ManifoldModel, x: &Point, t_max: f64) -> Self {
        let n = Self::TABLE_POINTS;
        let step = t_max / n as f64;
        let ts: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        let mut rate = vec![0.0; n + 1];
        let dirs = sphere_directions(2, Self::TABLE_ANGLES, 0.5);
        for d in &dirs {
            let dir = Coords::from_slice(&d[..2]);
            for (i, (_, jac)) in m.ray(x, &dir, &ts).iter().enumerate() {
                rate[i] += jac * ts[i] * 2.0 * PI / dirs.len() as f64;
            }
        }
        let mut ratio = vec![1.0; n + 1];
        let mut vol = 0.0;
        for i in 1..=n {
            vol += 0.5 * step * (rate[i - 1] + rate[i]);
            ratio[i] = vol / (PI * ts[i] * ts[i]);
        }
        // Trapezoid bias is O(step^2) near the origin; pin the first entry to the exact limit.
        ratio[0] = 1.0;
        VolumeFn::Table { step, ratio }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            VolumeFn::Euclidean { dim } => unit_ball_volume(dim) * t.powi(dim as i32),
            VolumeFn::Sphere { dim, curvature } => sphere_cap_volume(dim, curvature, t),
            VolumeFn::Table { step, ref ratio } => {
                let s = t / step;
                let i = (s.floor() as usize).min(ratio.len() - 2);
                let f = (s - i as f64).clamp(0.0, 1.0);
                let r = ratio[i] * (1.0 - f) + ratio[i + 1] * f;
                r * PI * t * t
            }
        }
    }
}

impl fmt::Display for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ManifoldModel::Euclidean { dim } => write!(f, "euclid:n={dim}"),
            ManifoldModel::Sphere { dim, curvature } => write!(f, "sphere:n={dim},K={curvature:?}"),
            ManifoldModel::Revolution { profile } => write!(f, "revolution:profile={},n=2", profile.name()),
        }
    }
}

/// Splits `kind:key=value,...` into the kind and its key/value pairs.
pub(crate) fn split_spec(spec: &str) -> Result<(&str, Vec<(&str, &str)>)> {
    let err = |reason: &str| Error::Parse { spec: spec.to_string(), reason: reason.to_string() };
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k.trim(), r.trim()),
        None => (spec.trim(), ""),
    };
    let mut pairs = Vec::new();
    if !rest.is_empty() {
        for item in rest.split(',') {
            let (k, v) = item.split_once('=').ok_or_else(|| err("expected key=value"))?;
            let k = k.trim();
            if pairs.iter().any(|(pk, _)| *pk == k) {
                return Err(err(&format!("duplicate key `{k}`")));
            }
            pairs.push((k, v.trim()));
        }
    }
    Ok((kind, pairs))
}

impl FromStr for ManifoldModel {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let err = |reason: String| Error::Parse { spec: spec.to_string(), reason };
        let (kind, pairs) = split_spec(spec)?;
        let mut dim: Option<usize> = None;
        let mut curvature: Option<f64> = None;
        let mut profile: Option<Profile> = None;
        for (k, v) in pairs {
            match (kind, k) {
                (_, "n") => dim = Some(v.parse().map_err(|_| err(format!("bad dimension `{v}`")))?),
                ("sphere", "K") => {
                    curvature = Some(v.parse().map_err(|_| err(format!("bad curvature `{v}`")))?)
                }
                ("revolution", "profile") => {
                    profile = Some(Profile::parse(v).ok_or_else(|| err(format!("unknown profile `{v}`")))?)
                }
                _ => return Err(err(format!("unknown key `{k}` for `{kind}`"))),
            }
        }
        let dim = dim.ok_or_else(|| err("missing n".into()))?;
        match kind {
            "euclid" => ManifoldModel::euclidean(dim),
            "sphere" => ManifoldModel::sphere(dim, curvature.ok_or_else(|| err("missing K".into()))?),
            "revolution" => {
                if dim != 2 {
                    return Err(err("surfaces of revolution have n = 2".into()));
                }
                Ok(ManifoldModel::revolution(profile.ok_or_else(|| err("missing profile".into()))?))
            }
            other => Err(err(format!("unknown manifold kind `{other}`"))),
        }
    }
}

impl Serialize for ManifoldModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ManifoldModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
