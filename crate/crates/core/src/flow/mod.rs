//! Forward Loewner flow `g_t`, the reversed flow giving `f_t = g_t^{-1}`, and
//! the `(X, Y)` coordinates in which `log |f_t'|` has an explicit integral form.
//!
//! Two schemes are provided. `Rk4` integrates the ODEs with the driver
//! continued piecewise linearly; `Slit` composes exact vertical-slit maps with
//! the driver frozen at substep midpoints. Near the singular start of the
//! reversed flow (`P_0 = iy` with `y` small) the RK4 step is additionally
//! capped by `singular_ratio * |P + beta|^2`.

mod backward;
mod forward;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub use backward::{
    backward_flow, backward_flow_from_values, eval_f, eval_f_index, eval_f_with_derivative_index,
    fprime_checked, fprime_variational, fprime_variational_index, BackwardFlow,
};
pub(crate) use backward::integrate_light;
pub use forward::{forward_point, forward_point_index, ForwardResult, ForwardStatus};

pub type ComplexPoint = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4,
    Slit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub scheme: Scheme,
    /// Minimum number of substeps per grid step.
    pub substeps: usize,
    /// Swallowing distance `delta`; `None` means `1e-6 * sqrt(dt)`.
    pub swallow_threshold: Option<f64>,
    /// A forward point started in the open half-plane counts as swallowed once
    /// its imaginary part drops to this level.
    pub min_imag: f64,
    /// RK4 step cap relative to the squared distance to the singularity.
    pub singular_ratio: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { scheme: Scheme::Rk4, substeps: 8, swallow_threshold: None, min_imag: 0.0, singular_ratio: 0.02 }
    }
}

impl FlowConfig {
    pub fn rk4(substeps: usize) -> Self {
        Self { substeps, ..Self::default() }
    }

    pub fn slit(substeps: usize) -> Self {
        Self { scheme: Scheme::Slit, substeps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(LabError::InvalidConfig("substeps must be >= 1".into()));
        }
        if let Some(d) = self.swallow_threshold {
            if !(d > 0.0) {
                return Err(LabError::InvalidConfig("swallow threshold must be > 0".into()));
            }
        }
        if !(self.singular_ratio > 0.0 && self.singular_ratio <= 1.0) {
            return Err(LabError::InvalidConfig("singular_ratio must be in (0, 1]".into()));
        }
        if !(self.min_imag >= 0.0) {
            return Err(LabError::InvalidConfig("min_imag must be >= 0".into()));
        }
        Ok(())
    }

    pub fn swallow_delta(&self, dt: f64) -> f64 {
        self.swallow_threshold.unwrap_or(1e-6 * dt.sqrt())
    }

    pub fn with_substeps(self, substeps: usize) -> Self {
        Self { substeps, ..self }
    }
}

/// Square root on the branch with non-negative imaginary part; on the real
/// axis the sign follows `hint`.
#[inline]
pub(crate) fn sqrt_upper(w: Complex64, hint: f64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 {
        -s
    } else if s.im == 0.0 && hint < 0.0 {
        Complex64::new(-s.re, 0.0)
    } else {
        s
    }
}
