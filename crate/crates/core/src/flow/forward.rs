use num_complex::Complex64;
use serde::Serialize;

use super::{sqrt_upper, FlowConfig, Scheme};
use crate::drivers::DriverPath;
use crate::error::{LabError, Result};
use crate::ode::rk4_step;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ForwardStatus {
    Alive { g: Complex64 },
    /// Swallowing time estimate.
    Swallowed { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardResult {
    pub status: ForwardStatus,
    /// `Re((g_t(z) - z) z)`, which tends to the half-plane capacity `2t` as `|z| -> inf`.
    pub hcap: Option<f64>,
}

impl ForwardResult {
    pub fn value(&self) -> Option<Complex64> {
        match self.status {
            ForwardStatus::Alive { g } => Some(g),
            ForwardStatus::Swallowed { .. } => None,
        }
    }

    pub fn is_swallowed(&self) -> bool {
        matches!(self.status, ForwardStatus::Swallowed { .. })
    }

    pub fn tau(&self) -> Option<f64> {
        match self.status {
            ForwardStatus::Swallowed { tau } => Some(tau),
            ForwardStatus::Alive { .. } => None,
        }
    }
}

/// Solves `dg/dt = 2 / (g - U_t)`, `g_0 = z`, up to grid index `k`.
pub fn forward_point_index(u: &DriverPath, z: Complex64, k: usize, cfg: &FlowConfig) -> Result<ForwardResult> {
    cfg.validate()?;
    u.grid().check_index(k)?;
    if !(z.re.is_finite() && z.im.is_finite()) || z.im < 0.0 {
        return Err(LabError::InvalidPoint(format!("need Im z >= 0, got {z}")));
    }
    if z.norm() == 0.0 {
        return Err(LabError::InvalidPoint("z = U_0 is swallowed at time 0".into()));
    }
    let dt = u.grid().dt();
    let delta = cfg.swallow_delta(dt);
    let on_line = z.im == 0.0;
    let m = cfg.substeps;
    let h_nom = dt / m as f64;
    let mut g = z;
    let swallowed = |t: f64| ForwardResult { status: ForwardStatus::Swallowed { tau: t }, hcap: None };
    for j in 0..k {
        let t0 = u.grid().time(j);
        let u0 = u.value(j);
        let slope = (u.value(j + 1) - u0) / dt;
        match cfg.scheme {
            Scheme::Rk4 => {
                let rhs = |s: f64, y: &[f64; 2]| -> [f64; 2] {
                    let w = Complex64::new(y[0] - u0 - slope * s, y[1]);
                    let inv = w.inv();
                    [2.0 * inv.re, 2.0 * inv.im]
                };
                let mut y = [g.re, g.im];
                let mut s = 0.0;
                while s < dt {
                    let w = Complex64::new(y[0] - u0 - slope * s, y[1]);
                    let w2 = w.norm_sqr();
                    if w2.sqrt() <= delta || !w2.is_finite() || (!on_line && y[1] <= cfg.min_imag) {
                        return Ok(swallowed(t0 + s));
                    }
                    let mut h = h_nom.min(cfg.singular_ratio * w2);
                    if s + h >= dt * (1.0 - 1e-12) {
                        h = dt - s;
                    }
                    let next = rk4_step(rhs, s, &y, h);
                    let w_next = next[0] - u0 - slope * (s + h);
                    if on_line && w_next.signum() != w.re.signum() {
                        return Ok(swallowed(t0 + s + (w.re * w.re / 4.0).min(h)));
                    }
                    y = next;
                    s = if h == dt - s { dt } else { s + h };
                }
                g = Complex64::new(y[0], if on_line { 0.0 } else { y[1] });
            }
            Scheme::Slit => {
                for i in 0..m {
                    let c = u0 + slope * (i as f64 + 0.5) * h_nom;
                    let w = g - c;
                    let w2 = w * w;
                    let next = w2 + 4.0 * h_nom;
                    let t_here = t0 + i as f64 * h_nom;
                    if on_line {
                        if next.re <= delta * delta {
                            return Ok(swallowed(t_here + (-w2.re / 4.0).clamp(0.0, h_nom)));
                        }
                        g = Complex64::new(c + w.re.signum() * next.re.sqrt(), 0.0);
                    } else {
                        let wn = sqrt_upper(next, w.re);
                        if wn.norm() <= delta || wn.im <= cfg.min_imag.max(delta * delta) {
                            return Ok(swallowed(t_here + (-w2.re / 4.0).clamp(0.0, h_nom)));
                        }
                        g = c + wn;
                    }
                }
                if (g - u.value(j + 1)).norm() <= delta {
                    return Ok(swallowed(u.grid().time(j + 1)));
                }
            }
        }
        if !(g.re.is_finite() && g.im.is_finite()) {
            return Err(LabError::NonFinite(j + 1));
        }
    }
    Ok(ForwardResult { status: ForwardStatus::Alive { g }, hcap: Some(((g - z) * z).re) })
}

pub fn forward_point(u: &DriverPath, z: Complex64, t: f64, cfg: &FlowConfig) -> Result<ForwardResult> {
    forward_point_index(u, z, u.grid().index_of(t)?, cfg)
}
