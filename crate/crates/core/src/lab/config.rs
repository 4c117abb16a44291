use crate::barrier::radius_precondition;
use crate::error::{Error, Result};
use crate::kernel::{KernelParams, KernelSpec};
use crate::manifold::{ManifoldModel, Point};
use crate::operator::{QuadratureConfig, TailPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// One experiment configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldModel,
    /// Kernel spec string, e.g. `model` or `aniso:seed=3`.
    pub kernel: String,
    pub params: ParamsConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seeds: Seeds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    /// The `σ` grid swept by most experiments.
    pub sigmas: Vec<f64>,
    pub sigma0: f64,
    /// Lower end of the large-`σ` barrier range.
    #[serde(default = "default_sigma1")]
    pub sigma1: f64,
    /// `σ` grid below `σ₁` for the plateau-`κ` barrier.
    #[serde(default = "default_small_sigmas")]
    pub small_sigmas: Vec<f64>,
    /// Constant `C₁` in the barrier exponent criterion.
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default)]
    pub abp: AbpParams,
    #[serde(default)]
    pub measure: MeasureParams,
    #[serde(default)]
    pub harnack: HarnackParams,
    #[serde(default)]
    pub hoelder: HoelderParams,
}

fn default_sigma1() -> f64 {
    1.5
}

fn default_small_sigmas() -> Vec<f64> {
    vec![0.5, 1.0]
}

fn default_c1() -> f64 {
    10.0
}

fn default_delta0() -> f64 {
    0.125
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbpParams {
    /// Level `M₀` of the good-ring search.
    #[serde(rename = "M0")]
    pub m0: f64,
    /// Contacts probed by the good-ring search.
    pub ring_contacts: usize,
}

impl Default for AbpParams {
    fn default() -> Self {
        Self { m0: 1e3, ring_contacts: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureParams {
    /// Base of the level sequence `t = M₀^i`.
    #[serde(rename = "M0")]
    pub m0: f64,
    pub levels: usize,
    /// Singularity exponent of the decay profile.
    pub gamma: f64,
}

impl Default for MeasureParams {
    fn default() -> Self {
        Self { m0: 2.0, levels: 12, gamma: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnackParams {
    /// Exponent of the weak-Harnack average.
    pub p: f64,
    /// Allowed `max_σ Q / min_σ Q`.
    pub variation_cap: f64,
}

impl Default for HarnackParams {
    fn default() -> Self {
        Self { p: 0.5, variation_cap: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HoelderParams {
    /// Scales `7·4^{-k}R` for `k = 0..=scales`.
    pub scales: usize,
    pub ratio_cap: f64,
    /// Allowed spread of the fitted exponent across `σ`.
    pub stability: f64,
}

impl Default for HoelderParams {
    fn default() -> Self {
        Self { scales: 4, ratio_cap: 10.0, stability: 0.15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Chart coordinates of `z₀`; the model origin when absent.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub radius: f64,
}

/// Overrides of the quadrature defaults; the split radius is chosen per
/// experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSettings {
    pub ratio: f64,
    pub inner_fraction: f64,
    pub gauss_points: usize,
    pub angular_nodes: usize,
    pub angular_shift: f64,
    pub far_factor: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let q = QuadratureConfig::new(1.0);
        Self {
            ratio: q.ratio,
            inner_fraction: q.inner_fraction,
            gauss_points: q.gauss_points,
            angular_nodes: q.angular_nodes,
            angular_shift: q.angular_shift,
            far_factor: q.far_factor,
        }
    }
}

impl QuadratureSettings {
    pub fn config(&self, split_radius: f64) -> QuadratureConfig {
        QuadratureConfig {
            split_radius,
            ratio: self.ratio,
            inner_fraction: self.inner_fraction,
            gauss_points: self.gauss_points,
            angular_nodes: self.angular_nodes,
            angular_shift: self.angular_shift,
            far_factor: self.far_factor,
            tail_policy: TailPolicy::AnalyticBound,
            tail_tolerance: None,
            mask_far: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Points of the grid on which differential inequalities are checked.
    pub ball_grid: usize,
    pub ring_samples: usize,
    pub measure_samples: usize,
    pub cube_samples: usize,
    pub oscillation_samples: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            ball_grid: 1000,
            ring_samples: 200,
            measure_samples: 200_000,
            cube_samples: 100_000,
            oscillation_samples: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub base: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { base: 20240917 }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel_spec()?;
        let p = &self.params;
        if p.sigmas.is_empty() {
            return Err(Error::Config("params.sigmas is empty".into()));
        }
        for &s in p.sigmas.iter().chain(&p.small_sigmas).chain([&p.sigma1]) {
            self.params_at(s)?;
        }
        if !(p.delta0 > 0.0 && p.delta0 <= 0.5) {
            return Err(Error::Config("params.delta0 must lie in (0, 1/2]".into()));
        }
        if !(p.measure.m0 > 1.0 && p.measure.gamma > 0.0 && p.measure.levels >= 2) {
            return Err(Error::Config("params.measure needs M0 > 1, gamma > 0 and at least 2 levels".into()));
        }
        if !(p.abp.m0 > 0.0) {
            return Err(Error::Config("params.abp.M0 must be positive".into()));
        }
        self.quadrature.config(1.0).validate()?;
        radius_precondition(&self.manifold, &self.center()?, self.geometry.radius)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        self.kernel.parse()
    }

    pub fn center(&self) -> Result<Point> {
        match &self.geometry.center {
            Some(xs) => self.manifold.point(xs),
            None => Ok(self.manifold.origin()),
        }
    }

    pub fn params_at(&self, sigma: f64) -> Result<KernelParams> {
        let p = &self.params;
        KernelParams::new(p.lambda, p.big_lambda, sigma, p.sigma0)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
