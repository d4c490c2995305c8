use num_complex::Complex64;
use serde::Serialize;

use super::{sqrt_upper, FlowConfig, Scheme};
use crate::drivers::{DriverPath, ReversedDriver};
use crate::error::{LabError, Result};
use crate::ode::rk4_step;

#[derive(Debug, Clone, Copy)]
struct RevState {
    /// `P_s`; the flow point is `W = P + beta = X + iY`.
    p: Complex64,
    /// `dP_s/dz`.
    dp: Complex64,
    /// `int 2 Re (P + beta)^{-2}`.
    logfp: f64,
    /// `int Gdot^2 dr`.
    gdot_sq: f64,
    /// `int Gdot dbeta` for the piecewise-linear continuation of `beta`.
    gdot_dbeta: f64,
}

/// Integrates `dP/ds = -2 / (P + beta_s)` from `P_0 = z` over the grid carrying
/// `beta`, calling `record(j, state)` at every grid index.
fn integrate(beta: &[f64], dt: f64, z: Complex64, cfg: &FlowConfig, mut record: impl FnMut(usize, &RevState)) -> RevState {
    let mut st = RevState { p: z, dp: Complex64::new(1.0, 0.0), logfp: 0.0, gdot_sq: 0.0, gdot_dbeta: 0.0 };
    record(0, &st);
    let m = cfg.substeps.max(1);
    let h_nom = dt / m as f64;
    for j in 0..beta.len() - 1 {
        let b0 = beta[j];
        let slope = (beta[j + 1] - b0) / dt;
        match cfg.scheme {
            Scheme::Rk4 => {
                let rhs = |sigma: f64, y: &[f64; 7]| -> [f64; 7] {
                    let w = Complex64::new(y[0] + b0 + slope * sigma, y[1]);
                    let inv = w.inv();
                    let inv2 = inv * inv;
                    let dp = Complex64::new(y[2], y[3]) * inv2 * 2.0;
                    let gdot = 2.0 * inv.re;
                    [-2.0 * inv.re, -2.0 * inv.im, dp.re, dp.im, 2.0 * inv2.re, gdot * gdot, gdot * slope]
                };
                let mut y = [st.p.re, st.p.im, st.dp.re, st.dp.im, st.logfp, st.gdot_sq, st.gdot_dbeta];
                let mut sigma = 0.0;
                while sigma < dt {
                    let w2 = (y[0] + b0 + slope * sigma).powi(2) + y[1] * y[1];
                    let mut h = h_nom.min(cfg.singular_ratio * w2);
                    if sigma + h >= dt * (1.0 - 1e-12) {
                        h = dt - sigma;
                    }
                    y = rk4_step(rhs, sigma, &y, h);
                    sigma = if h == dt - sigma { dt } else { sigma + h };
                }
                st = RevState {
                    p: Complex64::new(y[0], y[1]),
                    dp: Complex64::new(y[2], y[3]),
                    logfp: y[4],
                    gdot_sq: y[5],
                    gdot_dbeta: y[6],
                };
            }
            Scheme::Slit => {
                for i in 0..m {
                    let c = b0 + slope * (i as f64 + 0.5) * h_nom;
                    let w = st.p + c;
                    let w_mid = sqrt_upper(w * w - 2.0 * h_nom, 1.0);
                    let w_end = sqrt_upper(w * w - 4.0 * h_nom, 1.0);
                    let mult = w / w_end;
                    let gd = |v: Complex64| 2.0 * v.inv().re;
                    let (g0, g1, g2) = (gd(w), gd(w_mid), gd(w_end));
                    st.gdot_sq += h_nom / 6.0 * (g0 * g0 + 4.0 * g1 * g1 + g2 * g2);
                    st.gdot_dbeta += slope * h_nom / 6.0 * (g0 + 4.0 * g1 + g2);
                    st.logfp += mult.norm().ln();
                    st.dp *= mult;
                    st.p = w_end - c;
                }
            }
        }
        record(j + 1, &st);
    }
    st
}

/// `(P_t, P_t')` only, without the running integrals.
pub(crate) fn integrate_light(beta: &[f64], dt: f64, z: Complex64, cfg: &FlowConfig) -> (Complex64, Complex64) {
    let mut p = z;
    let mut dp = Complex64::new(1.0, 0.0);
    let m = cfg.substeps.max(1);
    let h_nom = dt / m as f64;
    for j in 0..beta.len() - 1 {
        let b0 = beta[j];
        let slope = (beta[j + 1] - b0) / dt;
        match cfg.scheme {
            Scheme::Rk4 => {
                let rhs = |sigma: f64, y: &[f64; 4]| -> [f64; 4] {
                    let inv = Complex64::new(y[0] + b0 + slope * sigma, y[1]).inv();
                    let d = Complex64::new(y[2], y[3]) * inv * inv * 2.0;
                    [-2.0 * inv.re, -2.0 * inv.im, d.re, d.im]
                };
                let mut y = [p.re, p.im, dp.re, dp.im];
                let mut sigma = 0.0;
                while sigma < dt {
                    let w2 = (y[0] + b0 + slope * sigma).powi(2) + y[1] * y[1];
                    let mut h = h_nom.min(cfg.singular_ratio * w2);
                    if sigma + h >= dt * (1.0 - 1e-12) {
                        h = dt - sigma;
                    }
                    y = rk4_step(rhs, sigma, &y, h);
                    sigma = if h == dt - sigma { dt } else { sigma + h };
                }
                p = Complex64::new(y[0], y[1]);
                dp = Complex64::new(y[2], y[3]);
            }
            Scheme::Slit => {
                for i in 0..m {
                    let c = b0 + slope * (i as f64 + 0.5) * h_nom;
                    let w = p + c;
                    let we = sqrt_upper(w * w - 4.0 * h_nom, 1.0);
                    dp *= w / we;
                    p = we - c;
                }
            }
        }
    }
    (p, dp)
}

/// Trajectories of the reversed flow in `(X, Y)` coordinates together with
/// the running integrals entering the representation of `log |f_t'|`.
#[derive(Debug, Clone, Serialize)]
pub struct BackwardFlow {
    pub anchor: usize,
    pub dt: f64,
    pub x: f64,
    pub y: f64,
    pub beta: Vec<f64>,
    pub x_path: Vec<f64>,
    pub y_path: Vec<f64>,
    /// `G = beta - X`.
    pub g: Vec<f64>,
    /// `Gdot = 2X / (X^2 + Y^2)`.
    pub gdot: Vec<f64>,
    /// `Gdot' = Ydot / Y - Gdot^2`, the Gubinelli derivative of `Gdot` with respect to `beta`.
    pub gdot_prime: Vec<f64>,
    /// Running `int_0^s 2(X^2 - Y^2)/(X^2 + Y^2)^2 dr`.
    pub logfp_path: Vec<f64>,
    /// Running `int_0^s Gdot^2 dr`.
    pub gdot_sq_integral: Vec<f64>,
    /// Running Riemann–Stieltjes `int_0^s Gdot dbeta` (linear continuation of `beta`).
    pub gdot_dbeta_integral: Vec<f64>,
    /// `P_t'(z)` from the variational equation carried along.
    pub derivative: Complex64,
}

impl BackwardFlow {
    pub fn t(&self) -> f64 {
        self.dt * self.anchor as f64
    }

    /// `log |f_t'(z + U_t)|`.
    pub fn logfp(&self) -> f64 {
        *self.logfp_path.last().unwrap()
    }

    pub fn fprime_modulus(&self) -> f64 {
        self.logfp().exp()
    }

    /// `f_t(z + U_t) = P_t + U_t` with `U_t = beta_t`.
    pub fn f_value(&self) -> Complex64 {
        let k = self.anchor;
        Complex64::new(self.x_path[k], self.y_path[k])
    }

    pub fn y_end(&self) -> f64 {
        *self.y_path.last().unwrap()
    }

    pub fn x_end(&self) -> f64 {
        *self.x_path.last().unwrap()
    }
}

pub fn backward_flow_from_values(beta: &[f64], dt: f64, x: f64, y: f64, cfg: &FlowConfig) -> Result<BackwardFlow> {
    cfg.validate()?;
    if !(y > 0.0 && y.is_finite()) {
        return Err(LabError::InvalidPoint(format!("y must be > 0, got {y}")));
    }
    if !x.is_finite() {
        return Err(LabError::InvalidPoint(format!("x must be finite, got {x}")));
    }
    if beta.len() < 2 {
        return Err(LabError::InvalidGrid("reversed driver needs at least one step".into()));
    }
    let n = beta.len();
    let mut out = BackwardFlow {
        anchor: n - 1,
        dt,
        x,
        y,
        beta: beta.to_vec(),
        x_path: Vec::with_capacity(n),
        y_path: Vec::with_capacity(n),
        g: Vec::with_capacity(n),
        gdot: Vec::with_capacity(n),
        gdot_prime: Vec::with_capacity(n),
        logfp_path: Vec::with_capacity(n),
        gdot_sq_integral: Vec::with_capacity(n),
        gdot_dbeta_integral: Vec::with_capacity(n),
        derivative: Complex64::new(1.0, 0.0),
    };
    let z = Complex64::new(x, y);
    let end = integrate(beta, dt, z, cfg, |j, st| {
        let xx = st.p.re + beta[j];
        let yy = st.p.im;
        let r2 = xx * xx + yy * yy;
        let gdot = 2.0 * xx / r2;
        out.x_path.push(xx);
        out.y_path.push(yy);
        out.g.push(beta[j] - xx);
        out.gdot.push(gdot);
        out.gdot_prime.push(2.0 / r2 - gdot * gdot);
        out.logfp_path.push(st.logfp);
        out.gdot_sq_integral.push(st.gdot_sq);
        out.gdot_dbeta_integral.push(st.gdot_dbeta);
    });
    out.derivative = end.dp;
    Ok(out)
}

/// Solves the `(X, Y)` system for the reversed driver `beta` from `X_0 = x`, `Y_0 = y`.
pub fn backward_flow(beta: &ReversedDriver, y: f64, x: f64, cfg: &FlowConfig) -> Result<BackwardFlow> {
    backward_flow_from_values(beta.values(), beta.grid().dt(), x, y, cfg)
}

fn reversed_values(u: &DriverPath, k: usize) -> Vec<f64> {
    let uk = u.value(k);
    (0..=k).map(|j| uk - u.value(k - j)).collect()
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0 && z.re.is_finite() && z.im.is_finite()) {
        return Err(LabError::InvalidPoint(format!("need Im z > 0, got {z}")));
    }
    Ok(())
}

/// `(f_t(z + U_t), f_t'(z + U_t))` at grid index `k`.
pub fn eval_f_with_derivative_index(u: &DriverPath, z: Complex64, k: usize, cfg: &FlowConfig) -> Result<(Complex64, Complex64)> {
    cfg.validate()?;
    check_upper(z)?;
    u.grid().check_index(k)?;
    if k == 0 {
        return Ok((z, Complex64::new(1.0, 0.0)));
    }
    let beta = reversed_values(u, k);
    let (p, dp) = integrate_light(&beta, u.grid().dt(), z, cfg);
    Ok((p + u.value(k), dp))
}

/// `f_t(z + U_t)` at grid index `k`.
pub fn eval_f_index(u: &DriverPath, z: Complex64, k: usize, cfg: &FlowConfig) -> Result<Complex64> {
    Ok(eval_f_with_derivative_index(u, z, k, cfg)?.0)
}

/// `f_t(z + U_t)` for a grid time `t`, via the reversed flow
/// `dP/ds = -2 / (P + beta_s)`, `P_0 = z`.
pub fn eval_f(u: &DriverPath, z: Complex64, t: f64, cfg: &FlowConfig) -> Result<Complex64> {
    eval_f_index(u, z, u.grid().index_of(t)?, cfg)
}

pub fn fprime_variational_index(u: &DriverPath, z: Complex64, k: usize, cfg: &FlowConfig) -> Result<Complex64> {
    Ok(eval_f_with_derivative_index(u, z, k, cfg)?.1)
}

/// `f_t'(z + U_t)` from the variational equation `d/ds P' = 2 P' / (P + beta)^2`.
pub fn fprime_variational(u: &DriverPath, z: Complex64, t: f64, cfg: &FlowConfig) -> Result<Complex64> {
    fprime_variational_index(u, z, u.grid().index_of(t)?, cfg)
}

/// Derivative at grid index `k` with the substep count doubled (and the
/// singular step cap halved) until the
/// variational modulus and `exp(logfp)` agree to relative `tol`.
/// Returns the derivative, the substeps used and the final relative gap.
pub fn fprime_checked(u: &DriverPath, z: Complex64, k: usize, cfg: &FlowConfig, tol: f64) -> Result<(Complex64, usize, f64)> {
    check_upper(z)?;
    u.grid().check_index(k)?;
    if k == 0 {
        return Ok((Complex64::new(1.0, 0.0), cfg.substeps, 0.0));
    }
    let beta = reversed_values(u, k);
    let mut c = *cfg;
    let mut last = (Complex64::new(1.0, 0.0), c.substeps, f64::INFINITY);
    for _ in 0..7 {
        let flow = backward_flow_from_values(&beta, u.grid().dt(), z.re, z.im, &c)?;
        let d = fprime_variational_index(u, z, k, &c)?;
        let gap = (d.norm() / flow.fprime_modulus() - 1.0).abs();
        last = (d, c.substeps, gap);
        if gap <= tol {
            break;
        }
        c.substeps *= 2;
        c.singular_ratio *= 0.5;
    }
    Ok(last)
}
