//! Surfaces of revolution written as graphs `z = h(|p|)` over the plane.
//!
//! Points live in the planar chart `p = (p1, p2)`, where the metric is
//! `g = I + ∇f ∇fᵀ` with `f(p) = h(|p|)`. Geodesics are integrated with
//! classical RK4 and the scalar Jacobi equation `y'' + K y = 0` is carried
//! along to give the polar volume density.

use super::coords::Coords;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Maximal RK4 step in arclength.
pub const MAX_STEP: f64 = 2.0e-3;

/// Radial profile of a convex surface of revolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `h(ρ) = ρ²`, Gauss curvature `4 / (1 + 4ρ²)²`.
    Paraboloid,
    /// `h(ρ) = sqrt(1 + ρ²)`, Gauss curvature `1 / (1 + 2ρ²)²`.
    Hyperboloid,
}

impl Profile {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "paraboloid" => Some(Profile::Paraboloid),
            "hyperboloid" => Some(Profile::Hyperboloid),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Paraboloid => "paraboloid",
            Profile::Hyperboloid => "hyperboloid",
        }
    }

    pub fn height(&self, rho: f64) -> f64 {
        match self {
            Profile::Paraboloid => rho * rho,
            Profile::Hyperboloid => (1.0 + rho * rho).sqrt(),
        }
    }

    /// `h'(ρ) / ρ`, smooth through the apex.
    pub fn slope_over_rho(&self, rho: f64) -> f64 {
        match self {
            Profile::Paraboloid => 2.0,
            Profile::Hyperboloid => 1.0 / (1.0 + rho * rho).sqrt(),
        }
    }

    /// `h''(ρ)`.
    pub fn second(&self, rho: f64) -> f64 {
        match self {
            Profile::Paraboloid => 2.0,
            Profile::Hyperboloid => (1.0 + rho * rho).powf(-1.5),
        }
    }

    /// `(h'' - h'/ρ) / ρ²`, smooth through the apex.
    fn defect_over_rho2(&self, rho: f64) -> f64 {
        match self {
            Profile::Paraboloid => 0.0,
            Profile::Hyperboloid => -(1.0 + rho * rho).powf(-1.5),
        }
    }

    /// Gauss curvature at chart radius `ρ`.
    pub fn gauss_curvature(&self, rho: f64) -> f64 {
        let a = self.slope_over_rho(rho);
        let b = self.second(rho);
        let w = 1.0 + a * a * rho * rho;
        a * b / (w * w)
    }

    /// Supremum of the Gauss curvature over the whole surface (attained at the apex).
    pub fn curvature_max(&self) -> f64 {
        self.gauss_curvature(0.0)
    }
}

/// Graph surface geometry in the planar chart.
#[derive(Clone, Copy, Debug)]
pub struct GraphSurface {
    pub profile: Profile,
}

impl GraphSurface {
    fn grad(&self, p: &Coords) -> [f64; 2] {
        let rho = p.norm();
        let a = self.profile.slope_over_rho(rho);
        [a * p[0], a * p[1]]
    }

    /// Orthonormal frame `g^{-1/2} e_i` at `p`, returned as columns.
    pub fn frame(&self, p: &Coords) -> [[f64; 2]; 2] {
        let w = self.grad(p);
        let s = w[0] * w[0] + w[1] * w[1];
        let c = if s < 1e-8 {
            -0.5 + 0.375 * s
        } else {
            (1.0 / (1.0 + s).sqrt() - 1.0) / s
        };
        [
            [1.0 + c * w[0] * w[0], c * w[0] * w[1]],
            [c * w[1] * w[0], 1.0 + c * w[1] * w[1]],
        ]
    }

    /// Chart velocity of frame components `comps` at `p`.
    pub fn to_chart(&self, p: &Coords, comps: &Coords) -> [f64; 2] {
        let e = self.frame(p);
        [
            e[0][0] * comps[0] + e[1][0] * comps[1],
            e[0][1] * comps[0] + e[1][1] * comps[1],
        ]
    }

    /// Frame components of a chart vector `v` at `p` (applies `g^{1/2}`).
    pub fn to_frame(&self, p: &Coords, v: [f64; 2]) -> Coords {
        let w = self.grad(p);
        let s = w[0] * w[0] + w[1] * w[1];
        let c = if s < 1e-8 {
            0.5 - 0.125 * s
        } else {
            ((1.0 + s).sqrt() - 1.0) / s
        };
        let wv = w[0] * v[0] + w[1] * v[1];
        Coords::from_slice(&[v[0] + c * w[0] * wv, v[1] + c * w[1] * wv])
    }

    /// Area density `sqrt(det g)` of the chart.
    pub fn area_density(&self, p: &Coords) -> f64 {
        let w = self.grad(p);
        (1.0 + w[0] * w[0] + w[1] * w[1]).sqrt()
    }

    pub fn gauss_curvature(&self, p: &Coords) -> f64 {
        self.profile.gauss_curvature(p.norm())
    }

    /// Right-hand side of the geodesic + Jacobi system in arclength.
    /// State: `[p1, p2, v1, v2, y, y']`.
    fn rhs(&self, s: &[f64; 6]) -> [f64; 6] {
        let rho2 = s[0] * s[0] + s[1] * s[1];
        let rho = rho2.sqrt();
        let a = self.profile.slope_over_rho(rho);
        let d = self.profile.defect_over_rho2(rho);
        let vv = s[2] * s[2] + s[3] * s[3];
        let pv = s[0] * s[2] + s[1] * s[3];
        let hess_vv = a * vv + d * pv * pv;
        let w2 = a * a * rho2;
        let acc = hess_vv / (1.0 + w2);
        let k = self.profile.gauss_curvature(rho);
        [s[2], s[3], -a * s[0] * acc, -a * s[1] * acc, s[5], -k * s[4]]
    }

    fn rk4_step(&self, s: &[f64; 6], h: f64) -> [f64; 6] {
        let k1 = self.rhs(s);
        let mut t = [0.0; 6];
        for i in 0..6 {
            t[i] = s[i] + 0.5 * h * k1[i];
        }
        let k2 = self.rhs(&t);
        for i in 0..6 {
            t[i] = s[i] + 0.5 * h * k2[i];
        }
        let k3 = self.rhs(&t);
        for i in 0..6 {
            t[i] = s[i] + h * k3[i];
        }
        let k4 = self.rhs(&t);
        let mut out = *s;
        for i in 0..6 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// Follows the unit-speed geodesic from `p` with frame direction `dir`
    /// (unit components) and records `(point, Jacobi density J(t))` at each
    /// arclength in `ts`, which must be sorted ascending and nonnegative.
    pub fn ray(&self, p: &Coords, dir: &Coords, ts: &[f64], max_step: f64) -> Vec<(Coords, f64)> {
        let v = self.to_chart(p, dir);
        let mut state = [p[0], p[1], v[0], v[1], 0.0, 1.0];
        let mut t = 0.0;
        let mut out = Vec::with_capacity(ts.len());
        for &target in ts {
            let span = target - t;
            if span > 0.0 {
                let steps = (span / max_step).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for _ in 0..steps {
                    state = self.rk4_step(&state, h);
                }
                t = target;
            }
            let jac = if target > 0.0 { (state[4] / target).max(0.0) } else { 1.0 };
            out.push((Coords::from_slice(&[state[0], state[1]]), jac));
        }
        out
    }

    pub fn exp(&self, p: &Coords, comps: &Coords) -> Coords {
        let len = comps.norm();
        if len == 0.0 {
            return *p;
        }
        let dir = *comps * (1.0 / len);
        self.ray(p, &dir, &[len], MAX_STEP)[0].0
    }

    /// Shooting solve of `exp_p(ξ) = q` by damped Newton iteration.
    pub fn shoot(&self, p: &Coords, q: &Coords) -> Option<Coords> {
        let diff = *q - *p;
        if diff.norm() == 0.0 {
            return Some(Coords::zeros(2));
        }
        let mut xi = self.to_frame(p, [diff[0], diff[1]]);
        let mut resid = self.exp(p, &xi) - *q;
        let mut rnorm = resid.norm();
        for _ in 0..60 {
            if rnorm < 1e-13 * (1.0 + q.norm()) {
                return Some(xi);
            }
            let h = 1e-7 * (1.0 + xi.norm());
            let mut jac = [[0.0; 2]; 2];
            for j in 0..2 {
                let e = Coords::basis(2, j);
                let fp = self.exp(p, &xi.axpy(h, &e));
                let fm = self.exp(p, &xi.axpy(-h, &e));
                for i in 0..2 {
                    jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-14 {
                return None;
            }
            let dx = [
                (jac[1][1] * resid[0] - jac[0][1] * resid[1]) / det,
                (-jac[1][0] * resid[0] + jac[0][0] * resid[1]) / det,
            ];
            let step = Coords::from_slice(&dx);
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = xi.axpy(-lam, &step);
                let r = self.exp(p, &trial) - *q;
                if r.norm() < rnorm {
                    xi = trial;
                    resid = r;
                    rnorm = r.norm();
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if !accepted {
                return if rnorm < 1e-10 * (1.0 + q.norm()) { Some(xi) } else { None };
            }
        }
        if rnorm < 1e-10 * (1.0 + q.norm()) {
            Some(xi)
        } else {
            None
        }
    }

    /// Metric length of the straight chart segment from `p` to `q`: an
    /// upper bound for the distance.
    pub fn chart_segment_length(&self, p: &Coords, q: &Coords) -> f64 {
        let d = *q - *p;
        let rule = crate::numeric::gauss_legendre_on(0.0, 1.0, 16);
        rule.iter()
            .map(|&(s, w)| {
                let x = p.axpy(s, &d);
                let g = self.grad(&x);
                let gd = g[0] * d[0] + g[1] * d[1];
                w * (d.norm_sq() + gd * gd).sqrt()
            })
            .sum()
    }

    /// Meridian arclength from the apex to chart radius `ρ`.
    pub fn meridian_length(&self, rho: f64) -> f64 {
        let panels = 8;
        let mut total = 0.0;
        for k in 0..panels {
            let a = rho * k as f64 / panels as f64;
            let b = rho * (k + 1) as f64 / panels as f64;
            for (r, w) in crate::numeric::gauss_legendre_on(a, b, 12) {
                let slope = self.profile.slope_over_rho(r) * r;
                total += w * (1.0 + slope * slope).sqrt();
            }
        }
        total
    }

    /// Conjugate radius lower bound `π / sqrt(K_max)`.
    pub fn conjugate_bound(&self) -> f64 {
        PI / self.profile.curvature_max().sqrt()
    }
}
