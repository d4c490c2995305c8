use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use crate::error::{LabError, Result};

/// How a sampled driver is continued between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    PiecewiseLinear,
    /// Constant on each open step, equal to the mean of the two endpoint values.
    PiecewiseConstantMidpoint,
}

/// A continuous driver sampled on a uniform grid, with `u_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverPath {
    grid: TimeGrid,
    values: Vec<f64>,
    #[serde(default)]
    interpolation: Interpolation,
}

impl DriverPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        Self::with_interpolation(grid, values, Interpolation::PiecewiseLinear)
    }

    pub fn with_interpolation(
        grid: TimeGrid,
        values: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite(i));
        }
        if values[0] != 0.0 {
            return Err(LabError::NonZeroStart(values[0]));
        }
        Ok(Self { grid, values, interpolation })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()], interpolation: Interpolation::PiecewiseLinear }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Value of the continued path at an arbitrary time in `[0, T]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.grid.steps();
        let x = (t / self.grid.dt()).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let frac = x - i as f64;
        match self.interpolation {
            Interpolation::PiecewiseLinear => {
                self.values[i] + frac * (self.values[i + 1] - self.values[i])
            }
            Interpolation::PiecewiseConstantMidpoint => {
                if frac == 0.0 {
                    self.values[i]
                } else if frac == 1.0 {
                    self.values[i + 1]
                } else {
                    0.5 * (self.values[i] + self.values[i + 1])
                }
            }
        }
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The mirrored driver `-U`.
    pub fn reflected(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| if *v == 0.0 { 0.0 } else { -v }).collect(),
            interpolation: self.interpolation,
        }
    }

    pub fn add(&self, other: &DriverPath) -> Result<Self> {
        if other.values.len() != self.values.len() {
            return Err(LabError::LengthMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self::with_interpolation(self.grid, values, self.interpolation)
    }

    /// Restriction to `[0, t_k]`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        let grid = self.grid.truncated(k)?;
        Self::with_interpolation(grid, self.values[..=k].to_vec(), self.interpolation)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `sup |U_t - U_s| / sqrt(t - s)` over all grid pairs.
    pub fn holder_half_norm(&self) -> f64 {
        let dt = self.grid.dt();
        let n = self.values.len();
        let mut best = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let r = (self.values[j] - self.values[i]).abs() / (((j - i) as f64) * dt).sqrt();
                best = best.max(r);
            }
        }
        best
    }
}

/// A driver with square-integrable derivative, stored as a piecewise-constant
/// derivative so that the energy integral is exact on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteEnergyDriver {
    path: DriverPath,
    hdot: Vec<f64>,
    energy: Vec<f64>,
}

/// Builds `h_t = int_0^t hdot` from one derivative value per grid step.
pub fn make_finite_energy(hdot: Vec<f64>, grid: TimeGrid) -> Result<FiniteEnergyDriver> {
    if hdot.len() != grid.steps() {
        return Err(LabError::LengthMismatch { expected: grid.steps(), got: hdot.len() });
    }
    if let Some(i) = hdot.iter().position(|v| !v.is_finite()) {
        return Err(LabError::NonFinite(i));
    }
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.len());
    let mut energy = Vec::with_capacity(grid.len());
    let (mut u, mut e) = (0.0, 0.0);
    values.push(u);
    energy.push(e);
    for d in &hdot {
        u += d * dt;
        e += d * d * dt;
        values.push(u);
        energy.push(e);
    }
    Ok(FiniteEnergyDriver {
        path: DriverPath { grid, values, interpolation: Interpolation::PiecewiseLinear },
        hdot,
        energy,
    })
}

impl FiniteEnergyDriver {
    pub fn zero(grid: TimeGrid) -> Self {
        make_finite_energy(vec![0.0; grid.steps()], grid).expect("zero derivative is valid")
    }

    /// `h_s = slope * s`.
    pub fn constant_slope(grid: TimeGrid, slope: f64) -> Result<Self> {
        make_finite_energy(vec![slope; grid.steps()], grid)
    }

    /// Piecewise-constant derivative taking `slopes[k]` on the k-th of
    /// `slopes.len()` equal subintervals of `[0, T]`.
    pub fn piecewise_slopes(grid: TimeGrid, slopes: &[f64]) -> Result<Self> {
        if slopes.is_empty() {
            return Err(LabError::InvalidSpec("slopes must be non-empty".into()));
        }
        let n = grid.steps();
        let m = slopes.len();
        let hdot = (0..n).map(|i| slopes[(i * m) / n]).collect();
        make_finite_energy(hdot, grid)
    }

    /// Smooth driver sampled through its derivative at step midpoints.
    pub fn from_derivative_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dt = grid.dt();
        let hdot = (0..grid.steps()).map(|i| f((i as f64 + 0.5) * dt)).collect();
        make_finite_energy(hdot, grid)
    }

    /// Reads a sampled path as piecewise linear: the derivative on each step is
    /// the difference quotient. Grid values are kept as given.
    pub fn from_path(path: DriverPath) -> Result<Self> {
        let dt = path.grid.dt();
        let hdot: Vec<f64> = path.increments().iter().map(|d| d / dt).collect();
        let mut energy = Vec::with_capacity(path.values.len());
        let mut e = 0.0;
        energy.push(e);
        for d in &hdot {
            e += d * d * dt;
            energy.push(e);
        }
        let path = DriverPath { interpolation: Interpolation::PiecewiseLinear, ..path };
        Ok(Self { path, hdot, energy })
    }

    pub fn path(&self) -> &DriverPath {
        &self.path
    }

    pub fn into_path(self) -> DriverPath {
        self.path
    }

    pub fn grid(&self) -> &TimeGrid {
        self.path.grid()
    }

    pub fn hdot(&self) -> &[f64] {
        &self.hdot
    }

    /// Energy profile `e(t_i) = int_0^{t_i} hdot^2`.
    pub fn energy_profile(&self) -> &[f64] {
        &self.energy
    }

    pub fn energy_at(&self, index: usize) -> f64 {
        self.energy[index]
    }

    pub fn total_energy(&self) -> f64 {
        *self.energy.last().unwrap()
    }

    /// `||h||_t^2` for a grid time `t`.
    pub fn cm_norm_sq(&self, t: f64) -> Result<f64> {
        Ok(self.energy[self.grid().index_of(t)?])
    }

    /// The reversed increment path `s -> h_{t_k} - h_{t_k - s}` on `[0, t_k]`.
    pub fn reversed(&self, k: usize) -> Result<Self> {
        let grid = self.grid().truncated(k)?;
        let hdot = self.hdot[..k].iter().rev().copied().collect();
        make_finite_energy(hdot, grid)
    }

    pub fn truncated(&self, k: usize) -> Result<Self> {
        let grid = self.grid().truncated(k)?;
        make_finite_energy(self.hdot[..k].to_vec(), grid)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        make_finite_energy(self.hdot.iter().map(|d| c * d).collect(), *self.grid())
    }

    pub fn add(&self, other: &FiniteEnergyDriver) -> Result<Self> {
        if other.hdot.len() != self.hdot.len() {
            return Err(LabError::LengthMismatch {
                expected: self.hdot.len(),
                got: other.hdot.len(),
            });
        }
        let hdot = self.hdot.iter().zip(&other.hdot).map(|(a, b)| a + b).collect();
        make_finite_energy(hdot, *self.grid())
    }
}

/// Free-function form of [`FiniteEnergyDriver::cm_norm_sq`].
pub fn cm_norm_sq(h: &FiniteEnergyDriver, t: f64) -> Result<f64> {
    h.cm_norm_sq(t)
}

/// `beta_s = U_t - U_{t-s}` on the grid of `[0, t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversedDriver {
    anchor: usize,
    path: DriverPath,
}

impl ReversedDriver {
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn path(&self) -> &DriverPath {
        &self.path
    }

    pub fn values(&self) -> &[f64] {
        self.path.values()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.path.grid()
    }

    pub fn into_path(self) -> DriverPath {
        self.path
    }
}

/// Reverses `U` at the grid index `k`.
pub fn time_reverse_index(u: &DriverPath, k: usize) -> Result<ReversedDriver> {
    let grid = u.grid().truncated(k)?;
    let uk = u.value(k);
    let values: Vec<f64> = (0..=k).map(|j| uk - u.value(k - j)).collect();
    Ok(ReversedDriver {
        anchor: k,
        path: DriverPath::with_interpolation(grid, values, u.interpolation())?,
    })
}

/// Reverses `U` at the grid time `t`.
pub fn time_reverse(u: &DriverPath, t: f64) -> Result<ReversedDriver> {
    let k = u.grid().index_of(t)?;
    time_reverse_index(u, k)
}
