use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A driver functional `F(t, x)` of class `C^{1,2}`, evaluated along a
/// Brownian path as `U_t = F(t, B_t)`.
pub trait Functional: Send + Sync {
    fn value(&self, t: f64, x: f64) -> f64;
    /// Spatial derivative `F'`.
    fn dx(&self, t: f64, x: f64) -> f64;
    /// Second spatial derivative `F''`.
    fn dxx(&self, t: f64, x: f64) -> f64;
    /// Time derivative.
    fn dt(&self, t: f64, x: f64) -> f64;
    /// True when `F'` does not depend on `x`; the reversed driver is then a
    /// semimartingale in its own filtration and no enlargement is needed.
    fn dx_space_independent(&self) -> bool {
        false
    }
    /// An upper bound for `|F'|^2` on `[0, horizon] x R`.
    fn dx_sq_bound(&self, horizon: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "F", rename_all = "snake_case")]
pub enum BuiltinFunctional {
    /// `F(t, x) = sqrt(kappa) x`.
    Linear { kappa: f64 },
    /// `F(t, x) = t^p x`.
    TPowP { p: f64 },
    /// `F(t, x) = t log(1 + x^2)`.
    TLog1pX2,
}

impl BuiltinFunctional {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BuiltinFunctional::Linear { kappa } if !(kappa >= 0.0 && kappa.is_finite()) => {
                Err(LabError::InvalidSpec(format!("kappa must be >= 0, got {kappa}")))
            }
            BuiltinFunctional::TPowP { p } if !(p > 0.0 && p.is_finite()) => {
                Err(LabError::InvalidSpec(format!("p must be > 0, got {p}")))
            }
            _ => {
                if self.value(0.0, 0.0) != 0.0 {
                    return Err(LabError::InvalidSpec("F(0,0) must vanish".into()));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinFunctional::Linear { .. } => "linear",
            BuiltinFunctional::TPowP { .. } => "t_pow_p",
            BuiltinFunctional::TLog1pX2 => "t_log1p_x2",
        }
    }
}

impl Functional for BuiltinFunctional {
    fn value(&self, t: f64, x: f64) -> f64 {
        match *self {
            BuiltinFunctional::Linear { kappa } => kappa.sqrt() * x,
            BuiltinFunctional::TPowP { p } => t.powf(p) * x,
            BuiltinFunctional::TLog1pX2 => t * (x * x).ln_1p(),
        }
    }

    fn dx(&self, t: f64, x: f64) -> f64 {
        match *self {
            BuiltinFunctional::Linear { kappa } => kappa.sqrt(),
            BuiltinFunctional::TPowP { p } => t.powf(p),
            BuiltinFunctional::TLog1pX2 => 2.0 * t * x / (1.0 + x * x),
        }
    }

    fn dxx(&self, t: f64, x: f64) -> f64 {
        match *self {
            BuiltinFunctional::Linear { .. } | BuiltinFunctional::TPowP { .. } => 0.0,
            BuiltinFunctional::TLog1pX2 => {
                let q = 1.0 + x * x;
                2.0 * t * (1.0 - x * x) / (q * q)
            }
        }
    }

    fn dt(&self, t: f64, x: f64) -> f64 {
        match *self {
            BuiltinFunctional::Linear { .. } => 0.0,
            BuiltinFunctional::TPowP { p } => p * t.powf(p - 1.0) * x,
            BuiltinFunctional::TLog1pX2 => (x * x).ln_1p(),
        }
    }

    fn dx_space_independent(&self) -> bool {
        !matches!(self, BuiltinFunctional::TLog1pX2)
    }

    fn dx_sq_bound(&self, horizon: f64) -> f64 {
        match *self {
            BuiltinFunctional::Linear { kappa } => kappa,
            BuiltinFunctional::TPowP { p } => horizon.powf(2.0 * p),
            // |2x / (1 + x^2)| <= 1
            BuiltinFunctional::TLog1pX2 => horizon * horizon,
        }
    }
}
