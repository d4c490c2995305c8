use serde::Serialize;

use crate::error::{LabError, Result};

/// Exponents of the moment estimate for a diffusivity `kappa < 2`:
/// `eps = (2 - kappa)/4`, `c_eps = (1 - eps)/kappa + 1/2`, `b = 1 + c_eps`, `p = 2 c_eps / b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateConstants {
    pub kappa: f64,
    /// `1/2 + 1/kappa`.
    pub c0: f64,
    pub eps: f64,
    pub c_eps: f64,
    pub b: f64,
    pub p: f64,
}

impl EstimateConstants {
    /// Hölder conjugate of `p`.
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Exponential-moment level `q b / (4 eps)` needed for `||A||^2` in the Hölder split.
    pub fn moment_alpha(&self) -> f64 {
        self.q() * self.b / (4.0 * self.eps)
    }

    /// `b > 2`, `p > 1`, `eps > 0` and `p b / 2 <= (1 - eps)/kappa + 1/2`.
    pub fn chain_holds(&self) -> bool {
        let tol = 1e-12 * self.c_eps.abs().max(1.0);
        self.b > 2.0
            && self.p > 1.0
            && self.eps > 0.0
            && self.p * self.b / 2.0 <= (1.0 - self.eps) / self.kappa + 0.5 + tol
    }
}

pub fn constants_for_kappa(kappa: f64) -> Result<EstimateConstants> {
    if !kappa.is_finite() || kappa >= 2.0 {
        return Err(LabError::KappaTooLarge(kappa));
    }
    if kappa <= 0.0 {
        return Err(LabError::KappaNonPositive(kappa));
    }
    let eps = (2.0 - kappa) / 4.0;
    let c_eps = (1.0 - eps) / kappa + 0.5;
    let b = 1.0 + c_eps;
    Ok(EstimateConstants { kappa, c0: 0.5 + 1.0 / kappa, eps, c_eps, b, p: 2.0 * c_eps / b })
}
