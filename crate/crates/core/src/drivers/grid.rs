use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform time grid `t_i = i * T / n` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(LabError::InvalidGrid(format!("horizon must be > 0, got {horizon}")));
        }
        if steps == 0 {
            return Err(LabError::InvalidGrid("steps must be >= 1".into()));
        }
        Ok(Self { horizon, steps })
    }

    /// Grid with `2^log2_steps` steps, so that dyadic partitions are exact sub-grids.
    pub fn dyadic(horizon: f64, log2_steps: u32) -> Result<Self> {
        Self::new(horizon, 1usize << log2_steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points (`steps + 1`).
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, index: usize) -> f64 {
        if index == self.steps {
            self.horizon
        } else {
            index as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    pub fn is_dyadic(&self) -> bool {
        self.steps.is_power_of_two()
    }

    /// Index of `t`, which must coincide with a grid point up to rounding.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let k = x.round();
        if !(k >= 0.0 && k <= self.steps as f64) || (x - k).abs() > 1e-9 * x.abs().max(1.0) {
            return Err(LabError::OffGrid { t });
        }
        Ok(k as usize)
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index > self.steps {
            return Err(LabError::IndexOutOfRange { index, steps: self.steps });
        }
        Ok(())
    }

    /// The same spacing restricted to `[0, t_k]`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        self.check_index(k)?;
        if k == 0 {
            return Err(LabError::InvalidGrid("cannot truncate to an empty interval".into()));
        }
        if k == self.steps {
            return Ok(*self);
        }
        Ok(Self { horizon: self.dt() * k as f64, steps: k })
    }

    /// Grid with the same horizon and `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.horizon, self.steps * factor.max(1))
    }
}
