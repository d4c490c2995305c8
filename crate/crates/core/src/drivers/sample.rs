use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::functional::{BuiltinFunctional, Functional};
use super::grid::TimeGrid;
use super::path::{DriverPath, FiniteEnergyDriver};
use crate::error::{LabError, Result};

/// Generator recorded in every report that carries sampled paths.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), ziggurat standard normal (rand_distr 0.5)";

/// One piece of a step-function diffusivity, active from `start` onwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaStep {
    pub start: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaProfile {
    Constant(f64),
    Steps(Vec<KappaStep>),
}

impl KappaProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            KappaProfile::Constant(k) => {
                if !(k.is_finite() && *k >= 0.0) {
                    return Err(LabError::InvalidSpec(format!("kappa must be >= 0, got {k}")));
                }
            }
            KappaProfile::Steps(steps) => {
                if steps.is_empty() || steps[0].start != 0.0 {
                    return Err(LabError::InvalidSpec("kappa steps must start at t = 0".into()));
                }
                if steps.windows(2).any(|w| w[1].start <= w[0].start) {
                    return Err(LabError::InvalidSpec("kappa step starts must increase".into()));
                }
                if let Some(s) = steps.iter().find(|s| !(s.kappa.is_finite() && s.kappa >= 0.0)) {
                    return Err(LabError::InvalidSpec(format!(
                        "kappa must be >= 0 everywhere, got {} at t = {}",
                        s.kappa, s.start
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            KappaProfile::Constant(k) => *k,
            KappaProfile::Steps(steps) => {
                steps.iter().take_while(|s| s.start <= t).last().map_or(steps[0].kappa, |s| s.kappa)
            }
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            KappaProfile::Constant(k) => *k,
            KappaProfile::Steps(steps) => steps.iter().fold(0.0, |m, s| f64::max(m, s.kappa)),
        }
    }
}

/// A finite-energy perturbation given by its slope on equal subintervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSpec {
    pub slopes: Vec<f64>,
}

impl SlopeSpec {
    pub fn build(&self, grid: TimeGrid) -> Result<FiniteEnergyDriver> {
        FiniteEnergyDriver::piecewise_slopes(grid, &self.slopes)
    }
}

/// The driver classes used throughout the lab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriverKind {
    Zero,
    /// Deterministic finite-energy driver with piecewise-constant slope.
    FiniteEnergy { slopes: Vec<f64> },
    Brownian { kappa: f64 },
    VariableKappa { kappa_steps: Vec<KappaStep> },
    HPerturbed { inner: Box<DriverKind>, h: SlopeSpec },
    Ou { lambda: f64 },
    Functional(BuiltinFunctional),
}

impl DriverKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriverKind::Zero => Ok(()),
            DriverKind::FiniteEnergy { slopes } => {
                if slopes.is_empty() || slopes.iter().any(|s| !s.is_finite()) {
                    return Err(LabError::InvalidSpec("slopes must be finite and non-empty".into()));
                }
                Ok(())
            }
            DriverKind::Brownian { kappa } => KappaProfile::Constant(*kappa).validate(),
            DriverKind::VariableKappa { kappa_steps } => {
                KappaProfile::Steps(kappa_steps.clone()).validate()
            }
            DriverKind::HPerturbed { inner, h } => {
                if matches!(**inner, DriverKind::HPerturbed { .. }) {
                    return Err(LabError::InvalidSpec("nested perturbations are not supported".into()));
                }
                DriverKind::FiniteEnergy { slopes: h.slopes.clone() }.validate()?;
                inner.validate()
            }
            DriverKind::Ou { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(LabError::InvalidSpec(format!("OU rate must be > 0, got {lambda}")));
                }
                Ok(())
            }
            DriverKind::Functional(f) => f.validate(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, DriverKind::Zero | DriverKind::FiniteEnergy { .. })
    }

    /// Diffusivity of the martingale part, when the class fixes one.
    pub fn nominal_kappa(&self, horizon: f64) -> Option<f64> {
        match self {
            DriverKind::Zero | DriverKind::FiniteEnergy { .. } => Some(0.0),
            DriverKind::Brownian { kappa } => Some(*kappa),
            DriverKind::VariableKappa { kappa_steps } => {
                Some(KappaProfile::Steps(kappa_steps.clone()).max())
            }
            DriverKind::HPerturbed { inner, .. } => inner.nominal_kappa(horizon),
            DriverKind::Ou { lambda } => Some(*lambda),
            DriverKind::Functional(f) => Some(f.dx_sq_bound(horizon)),
        }
    }
}

/// A sampled Brownian path with (possibly time-dependent) diffusivity.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub seed: u64,
    pub kappa: KappaProfile,
}

impl BrownianPath {
    pub fn as_driver(&self) -> DriverPath {
        DriverPath::new(self.grid, self.values.clone()).expect("brownian samples start at zero")
    }
}

/// Everything produced by one draw, including the ingredients needed to
/// decompose the reversed driver.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverSample {
    pub path: DriverPath,
    /// Underlying Brownian motion (scaled by kappa for the Brownian kinds,
    /// standard for functionals).
    pub brownian: Option<BrownianPath>,
    /// The stationary OU process `Z`, for OU drivers (`U = Z - Z_0`).
    pub ou: Option<Vec<f64>>,
    /// The finite-energy part of a perturbed driver.
    pub perturbation: Option<FiniteEnergyDriver>,
    pub seed: u64,
}

/// Mixes a base seed with a path index into an independent 64-bit seed.
pub fn path_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sample_brownian(grid: TimeGrid, kappa: &KappaProfile, seed: u64) -> Result<BrownianPath> {
    kappa.validate()?;
    let mut r = rng(seed);
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.len());
    let mut b = 0.0;
    values.push(b);
    for i in 0..grid.steps() {
        let z: f64 = StandardNormal.sample(&mut r);
        b += (kappa.at(grid.time(i)) * dt).sqrt() * z;
        values.push(b);
    }
    Ok(BrownianPath { grid, values, seed, kappa: kappa.clone() })
}

/// Stationary OU process `dZ = -lambda Z dt + sqrt(lambda) dB` with
/// `Z_0 ~ N(0, 1/2)`, sampled with its exact Gaussian transition.
pub fn sample_ou(grid: TimeGrid, lambda: f64, seed: u64) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(LabError::InvalidSpec(format!("OU rate must be > 0, got {lambda}")));
    }
    let mut r = rng(seed);
    let decay = (-lambda * grid.dt()).exp();
    let sd = (0.5 * (1.0 - decay * decay)).sqrt();
    let z0: f64 = StandardNormal.sample(&mut r);
    let mut z = z0 * 0.5f64.sqrt();
    let mut out = Vec::with_capacity(grid.len());
    out.push(z);
    for _ in 0..grid.steps() {
        let xi: f64 = StandardNormal.sample(&mut r);
        z = z * decay + sd * xi;
        out.push(z);
    }
    Ok(out)
}

pub fn sample_driver_detailed(kind: &DriverKind, grid: TimeGrid, seed: u64) -> Result<DriverSample> {
    kind.validate()?;
    let plain = |path| DriverSample { path, brownian: None, ou: None, perturbation: None, seed };
    match kind {
        DriverKind::Zero => Ok(plain(DriverPath::zero(grid))),
        DriverKind::FiniteEnergy { slopes } => {
            Ok(plain(FiniteEnergyDriver::piecewise_slopes(grid, slopes)?.into_path()))
        }
        DriverKind::Brownian { kappa } => {
            let b = sample_brownian(grid, &KappaProfile::Constant(*kappa), seed)?;
            Ok(DriverSample { path: b.as_driver(), brownian: Some(b), ..plain(DriverPath::zero(grid)) })
        }
        DriverKind::VariableKappa { kappa_steps } => {
            let b = sample_brownian(grid, &KappaProfile::Steps(kappa_steps.clone()), seed)?;
            Ok(DriverSample { path: b.as_driver(), brownian: Some(b), ..plain(DriverPath::zero(grid)) })
        }
        DriverKind::HPerturbed { inner, h } => {
            let mut s = sample_driver_detailed(inner, grid, seed)?;
            let h = h.build(grid)?;
            s.path = s.path.add(h.path())?;
            s.perturbation = Some(h);
            Ok(s)
        }
        DriverKind::Ou { lambda } => {
            let z = sample_ou(grid, *lambda, seed)?;
            let values = z.iter().map(|v| v - z[0]).collect();
            Ok(DriverSample { path: DriverPath::new(grid, values)?, ou: Some(z), ..plain(DriverPath::zero(grid)) })
        }
        DriverKind::Functional(f) => {
            let b = sample_brownian(grid, &KappaProfile::Constant(1.0), seed)?;
            let values = b.values.iter().enumerate().map(|(i, x)| f.value(grid.time(i), *x)).collect();
            Ok(DriverSample { path: DriverPath::new(grid, values)?, brownian: Some(b), ..plain(DriverPath::zero(grid)) })
        }
    }
}

/// One sample path; identical output for identical `(kind, grid, seed)`.
pub fn sample_driver(kind: &DriverKind, grid: TimeGrid, seed: u64) -> Result<DriverPath> {
    Ok(sample_driver_detailed(kind, grid, seed)?.path)
}
