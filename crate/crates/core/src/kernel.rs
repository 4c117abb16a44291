//! The operator class: kernel densities pinched between multiples of the
//! model kernel `k(x, z) = (2-σ) / (μ(B(x, d)) d^σ)` and symmetric under
//! geodesic reflection inside the injectivity ball.

use crate::error::{Error, Result};
use crate::manifold::{split_spec, Coords, ManifoldModel, Point, CUT_GUARD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Ellipticity constants and order of the class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub sigma: f64,
    pub sigma0: f64,
}

impl KernelParams {
    pub fn new(lambda: f64, big_lambda: f64, sigma: f64, sigma0: f64) -> Result<Self> {
        let p = Self { lambda, big_lambda, sigma, sigma0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda > 0.0 && self.lambda <= self.big_lambda && self.big_lambda.is_finite()) {
            return bad(format!("need 0 < lambda <= Lambda, got {} and {}", self.lambda, self.big_lambda));
        }
        if !(self.sigma0 > 0.0 && self.sigma0 < 2.0) {
            return bad(format!("sigma0 must lie in (0,2), got {}", self.sigma0));
        }
        if !(self.sigma >= self.sigma0 && self.sigma < 2.0) {
            return bad(format!("sigma must lie in [sigma0, 2), got {}", self.sigma));
        }
        Ok(())
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, sigma0: self.sigma0.min(sigma), ..*self }
    }

    /// Model kernel value for a ball of volume `ball` and radius `d`.
    #[inline]
    pub fn model(&self, ball: f64, d: f64) -> f64 {
        (2.0 - self.sigma) / (ball * d.powf(self.sigma))
    }
}

/// `k(x, z)` for the given manifold.
pub fn model_density(m: &ManifoldModel, x: &Point, z: &Point, params: &KernelParams) -> Result<f64> {
    let d = m.dist(x, z);
    if d == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(params.model(m.ball_volume(x, d), d))
}

/// Density `ν_x(z) = w(x, z) k(x, z)` described by its weight.
#[derive(Clone)]
pub enum Weight {
    Const(f64),
    Aniso(AnisoWeight),
    /// Arbitrary weight `w(x, z)`; used to construct deliberate violations.
    Custom(Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Const(w) => write!(f, "Const({w})"),
            Weight::Aniso(a) => write!(f, "{a:?}"),
            Weight::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `w = λ + (Λ-λ) [mix (v·a)² + (1-mix) (1 + sin(ω d + φ))/2]` where `v`
/// is the unit direction of `log_x z`. The angular factor is even in `v`,
/// hence reflection symmetric. Beyond the injectivity radius only the
/// radial factor is used.
#[derive(Clone, Debug, PartialEq)]
pub struct AnisoWeight {
    pub seed: u64,
    pub axis: Coords,
    pub mix: f64,
    pub omega: f64,
    pub phase: f64,
}

impl AnisoWeight {
    pub fn from_seed(seed: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut axis = Coords::zeros(dim);
        loop {
            for i in 0..dim {
                axis[i] = rng.gen_range(-1.0..1.0);
            }
            let n = axis.norm();
            if n > 0.1 && n <= 1.0 {
                axis = axis * (1.0 / n);
                break;
            }
        }
        Self {
            seed,
            axis,
            mix: rng.gen_range(0.0..1.0),
            omega: rng.gen_range(0.5..8.0),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    fn factor(&self, dir: Option<&Coords>, d: f64) -> f64 {
        let radial = 0.5 * (1.0 + (self.omega * d + self.phase).sin());
        match dir {
            Some(v) => {
                let c = v.dot(&self.axis);
                self.mix * c * c + (1.0 - self.mix) * radial
            }
            None => radial,
        }
    }
}

/// Kernel spec string: `model`, `const:w=<v>` or `aniso:seed=<k>`.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    Model,
    Const(f64),
    Aniso(u64),
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, pairs) = split_spec(spec)?;
        let err = |reason: &str| Error::Parse { spec: spec.to_string(), reason: reason.to_string() };
        let single = |key: &str| -> Result<&str> {
            match pairs.as_slice() {
                [(k, v)] if *k == key => Ok(v),
                _ => Err(err(&format!("expected exactly `{key}=<value>`"))),
            }
        };
        match kind {
            "model" if pairs.is_empty() => Ok(KernelSpec::Model),
            "model" => Err(err("model takes no parameters")),
            "const" => {
                let w: f64 = single("w")?.parse().map_err(|_| err("w must be a number"))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(err("w must be positive"));
                }
                Ok(KernelSpec::Const(w))
            }
            "aniso" => Ok(KernelSpec::Aniso(single("seed")?.parse().map_err(|_| err("seed must be an integer"))?)),
            _ => Err(err("unknown kernel kind")),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Model => write!(f, "model"),
            KernelSpec::Const(w) => write!(f, "const:w={w:?}"),
            KernelSpec::Aniso(s) => write!(f, "aniso:seed={s}"),
        }
    }
}

/// A kernel density of the class on a given manifold.
#[derive(Clone, Debug)]
pub struct KernelDensity {
    pub weight: Weight,
    pub params: KernelParams,
    pub manifold: ManifoldModel,
}

impl KernelDensity {
    pub fn model(m: &ManifoldModel, params: KernelParams) -> Self {
        Self { weight: Weight::Const(1.0), params, manifold: *m }
    }

    pub fn constant(m: &ManifoldModel, params: KernelParams, w: f64) -> Self {
        Self { weight: Weight::Const(w), params, manifold: *m }
    }

    pub fn from_spec(spec: &KernelSpec, m: &ManifoldModel, params: KernelParams) -> Self {
        match *spec {
            KernelSpec::Model => Self::model(m, params),
            KernelSpec::Const(w) => Self::constant(m, params, w),
            KernelSpec::Aniso(seed) => anisotropic_family(m, params, seed),
        }
    }

    /// Multiplies the current weight by `f(x, z)`.
    pub fn modulated(&self, f: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static) -> Self {
        let inner = self.clone();
        let weight = Weight::Custom(Arc::new(move |x: &Point, z: &Point| {
            let base = inner.weight_between(x, z);
            base * f(x, z)
        }));
        Self { weight, params: self.params, manifold: self.manifold }
    }

    /// `ν_x(z) / k(x, z)` when the direction and distance from `x` are
    /// already known. `dir` must be `None` beyond the injectivity radius.
    pub fn weight_at(&self, x: &Point, z: &Point, dir: Option<&Coords>, d: f64) -> f64 {
        let p = &self.params;
        match &self.weight {
            Weight::Const(w) => *w,
            Weight::Aniso(a) => p.lambda + (p.big_lambda - p.lambda) * a.factor(dir, d),
            Weight::Custom(f) => f(x, z),
        }
    }

    fn weight_between(&self, x: &Point, z: &Point) -> f64 {
        let m = &self.manifold;
        let d = m.dist(x, z);
        let dir = if d > 0.0 && d < m.injectivity_radius(x) - CUT_GUARD {
            m.log(x, z).ok().map(|v| v.comps * (1.0 / d))
        } else {
            None
        };
        self.weight_at(x, z, dir.as_ref(), d)
    }

    /// `ν_x(z)`.
    pub fn density(&self, x: &Point, z: &Point) -> Result<f64> {
        let k = model_density(&self.manifold, x, z, &self.params)?;
        Ok(self.weight_between(x, z) * k)
    }
}

/// Seeded test kernels with weight in `[λ, Λ]` built from a radial factor
/// and a reflection-symmetric angular factor.
pub fn anisotropic_family(m: &ManifoldModel, params: KernelParams, seed: u64) -> KernelDensity {
    KernelDensity {
        weight: Weight::Aniso(AnisoWeight::from_seed(seed, m.dim())),
        params,
        manifold: *m,
    }
}

/// Outcome of sampling the ellipticity and symmetry conditions.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub samples: usize,
    /// Largest relative excursion of `ν/k` outside `[λ, Λ]`.
    pub ellipticity_violation: f64,
    /// Largest relative mismatch `|ν(z) - ν(T z)| / ν(z)` inside the injectivity ball.
    pub symmetry_violation: f64,
    pub witness: Option<(Point, Point)>,
}

const ADMISSIBILITY_TOL: f64 = 1e-9;

/// Samples `budget` pairs `(x, z)` around the manifold origin and checks
/// both defining conditions of the class.
pub fn check_admissible(nu: &KernelDensity, budget: usize) -> AdmissibilityReport {
    assert!(budget >= 1, "sample budget must be positive");
    let m = &nu.manifold;
    let p = &nu.params;
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut ell: f64 = 0.0;
    let mut sym: f64 = 0.0;
    let mut witness = None;
    let mut worst = 0.0;
    for _ in 0..budget {
        let mut v = Coords::zeros(n);
        for i in 0..n {
            v[i] = rng.gen_range(-0.5..0.5);
        }
        let x = m.exp(&m.origin(), &v);
        let inj = m.injectivity_radius(&x);
        let reach = inj.min(3.0);
        let t = rng.gen_range(0.02..1.0) * reach;
        let mut dir = Coords::zeros(n);
        for i in 0..n {
            dir[i] = rng.gen_range(-1.0..1.0);
        }
        if dir.norm() < 1e-3 {
            continue;
        }
        let dir = dir * (1.0 / dir.norm());
        let z = m.exp(&x, &(dir * t));
        let d = m.dist(&x, &z);
        if d == 0.0 {
            continue;
        }
        let dir_known = (d < inj - CUT_GUARD).then_some(&dir);
        let w = nu.weight_at(&x, &z, dir_known, d);
        let e = ((p.lambda - w).max(w - p.big_lambda) / p.lambda).max(0.0);
        ell = ell.max(e);
        let mut s = 0.0;
        if d < inj - CUT_GUARD {
            if let Ok(zr) = m.reflect(&x, &z) {
                let wr = nu.weight_at(&x, &zr, Some(&(-dir)), d);
                s = (w - wr).abs() / w.abs().max(f64::MIN_POSITIVE);
                sym = sym.max(s);
            }
        }
        let score = e.max(s);
        if score > worst {
            worst = score;
            witness = Some((x, z));
        }
    }
    let pass = ell <= ADMISSIBILITY_TOL && sym <= ADMISSIBILITY_TOL;
    AdmissibilityReport {
        pass,
        samples: budget,
        ellipticity_violation: ell,
        symmetry_violation: sym,
        witness: if pass { None } else { witness },
    }
}
