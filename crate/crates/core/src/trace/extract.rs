use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drivers::{time_reverse_index, DriverPath};
use crate::error::{LabError, Result};
use crate::flow::{integrate_light, FlowConfig};
use crate::stats::least_squares;

/// Schedule `y_k = y0 * factor^k`, `k = 0..=k_max`, with Cauchy stopping at `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub y0: f64,
    pub factor: f64,
    pub k_max: usize,
    pub tol: f64,
    /// Exponent of the auxiliary certificate `|f'| <~ y^-theta`.
    pub theta: f64,
    /// Evaluate every `stride`-th grid time (the horizon is always included).
    pub stride: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { y0: 1.0, factor: 0.5, k_max: 24, tol: 1e-4, theta: 0.9, stride: 1 }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::InvalidConfig(m.to_string()));
        if !(self.y0 > 0.0 && self.y0.is_finite()) {
            return bad("trace y0 must be > 0");
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return bad("trace factor must be in (0, 1)");
        }
        if !(self.tol > 0.0) {
            return bad("trace tol must be > 0");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("trace theta must be in (0, 1)");
        }
        if self.stride == 0 || self.k_max == 0 {
            return bad("trace stride and k_max must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub index: usize,
    pub t: f64,
    pub gamma: Complex64,
    pub converged: bool,
    /// Level at which the Cauchy gap first fell below `tol` (or the last level tried).
    pub level: usize,
    pub gap: f64,
    /// Coarse estimate of `v(t, y0) = int_0^y0 |f_t'(ir + U_t)| dr` from the level samples.
    pub v: f64,
    /// `|f_t'|` at the last level.
    pub fprime: f64,
    /// Fitted slope of `log |f'|` against `log y` over levels with `y >= sqrt(dt)`.
    pub theta_slope: Option<f64>,
}

impl TracePoint {
    /// Auxiliary decay certificate: the fitted slope exceeds `-theta`.
    pub fn theta_certified(&self, theta: f64) -> Option<bool> {
        self.theta_slope.map(|s| s > -theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub config: TraceConfig,
    pub points: Vec<TracePoint>,
}

impl Trace {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn gammas(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.gamma).collect()
    }

    pub fn unconverged(&self) -> usize {
        self.points.iter().filter(|p| !p.converged).count()
    }

    pub fn converged_fraction(&self) -> f64 {
        1.0 - self.unconverged() as f64 / self.points.len() as f64
    }

    /// Times and points of converged entries only.
    pub fn converged_points(&self) -> (Vec<f64>, Vec<Complex64>) {
        self.points.iter().filter(|p| p.converged).map(|p| (p.t, p.gamma)).unzip()
    }

    pub fn require_converged(&self) -> Result<()> {
        match self.unconverged() {
            0 => Ok(()),
            n => Err(LabError::UnconvergedTrace(n)),
        }
    }

    /// `t,re,im,converged,level,gap`, LF-terminated.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,re,im,converged,level,gap")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{},{},{}", p.t, p.gamma.re, p.gamma.im, p.converged, p.level, p.gap)?;
        }
        Ok(())
    }
}

fn trace_point(u: &DriverPath, k: usize, cfg: &TraceConfig, flow: &FlowConfig) -> Result<TracePoint> {
    let t = u.grid().time(k);
    if k == 0 {
        return Ok(TracePoint {
            index: 0,
            t,
            gamma: Complex64::new(0.0, 0.0),
            converged: true,
            level: 0,
            gap: 0.0,
            v: 0.0,
            fprime: 1.0,
            theta_slope: None,
        });
    }
    let beta = time_reverse_index(u, k)?.into_path();
    let dt = u.grid().dt();
    let uk = u.value(k);
    let mut ys = Vec::new();
    let mut moduli = Vec::new();
    let mut prev: Option<Complex64> = None;
    let mut gap = f64::INFINITY;
    let mut level = 0;
    let mut converged = false;
    let mut gamma = Complex64::new(0.0, 0.0);
    for l in 0..=cfg.k_max {
        let y = cfg.y0 * cfg.factor.powi(l as i32);
        let (p, dp) = integrate_light(beta.values(), dt, Complex64::new(0.0, y), flow);
        let f = p + uk;
        if !(f.re.is_finite() && f.im.is_finite()) {
            return Err(LabError::NonFinite(k));
        }
        ys.push(y);
        moduli.push(dp.norm());
        gamma = f;
        level = l;
        if let Some(q) = prev {
            gap = (f - q).norm();
            if gap < cfg.tol {
                converged = true;
                break;
            }
        }
        prev = Some(f);
    }
    let mut v = ys.last().unwrap() * moduli.last().unwrap();
    for i in 0..ys.len() - 1 {
        v += 0.5 * (moduli[i] + moduli[i + 1]) * (ys[i] - ys[i + 1]);
    }
    let resolved: Vec<(f64, f64)> = ys
        .iter()
        .zip(&moduli)
        .filter(|(y, m)| **y >= dt.sqrt() && **m > 0.0)
        .map(|(y, m)| (y.ln(), m.ln()))
        .collect();
    let theta_slope = if resolved.len() >= 3 {
        let (x, yv): (Vec<f64>, Vec<f64>) = resolved.into_iter().unzip();
        least_squares(&x, &yv).map(|(_, b)| b)
    } else {
        None
    };
    Ok(TracePoint { index: k, t, gamma, converged, level, gap, v, fprime: *moduli.last().unwrap(), theta_slope })
}

/// Trace at the given grid indices.
pub fn extract_trace_at(u: &DriverPath, indices: &[usize], cfg: &TraceConfig, flow: &FlowConfig) -> Result<Trace> {
    cfg.validate()?;
    flow.validate()?;
    for &k in indices {
        u.grid().check_index(k)?;
    }
    let points = indices.par_iter().map(|&k| trace_point(u, k, cfg, flow)).collect::<Result<Vec<_>>>()?;
    Ok(Trace { config: *cfg, points })
}

/// `gamma_t = lim_{y -> 0} f_t(iy + U_t)` at every `stride`-th grid time.
pub fn extract_trace(u: &DriverPath, cfg: &TraceConfig, flow: &FlowConfig) -> Result<Trace> {
    let n = u.grid().steps();
    let mut idx: Vec<usize> = (0..=n).step_by(cfg.stride.max(1)).collect();
    if *idx.last().unwrap() != n {
        idx.push(n);
    }
    extract_trace_at(u, &idx, cfg, flow)
}
