use num_complex::Complex64;
use serde::Serialize;

use super::extract::Trace;
use crate::error::Result;

/// `sup |z_j - z_i| / (t_j - t_i)^alpha` over all pairs.
pub fn holder_norm(ts: &[f64], zs: &[Complex64], alpha: f64) -> f64 {
    let mut best = 0.0f64;
    for j in 0..zs.len() {
        for i in 0..j {
            let dt = ts[j] - ts[i];
            if dt > 0.0 {
                best = best.max((zs[j] - zs[i]).norm() / dt.powf(alpha));
            }
        }
    }
    best
}

/// Lipschitz constant of `s -> z(s^2)`, i.e. `sup |z_j - z_i| / (sqrt t_j - sqrt t_i)`.
pub fn sqrt_lip(ts: &[f64], zs: &[Complex64]) -> f64 {
    let r: Vec<f64> = ts.iter().map(|t| t.sqrt()).collect();
    holder_norm(&r, zs, 1.0)
}

/// Exact grid p-variation `(sup_partitions sum |dz|^p)^(1/p)` over the sampled
/// points, by dynamic programming over the last partition point.
pub fn pvar(zs: &[Complex64], p: f64) -> f64 {
    if zs.len() < 2 {
        return 0.0;
    }
    let mut best = vec![0.0f64; zs.len()];
    for j in 1..zs.len() {
        let mut b = 0.0f64;
        for i in 0..j {
            b = b.max(best[i] + (zs[j] - zs[i]).norm().powf(p));
        }
        best[j] = b;
    }
    best[zs.len() - 1].powf(1.0 / p)
}

/// `min |z_j - z_i|` over pairs with `t_j - t_i >= separation`, with the minimizing times.
pub fn min_gap(ts: &[f64], zs: &[Complex64], separation: f64) -> Option<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for j in 0..zs.len() {
        for i in 0..j {
            if ts[j] - ts[i] >= separation * (1.0 - 1e-12) {
                let d = (zs[j] - zs[i]).norm();
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, ts[i], ts[j]));
                }
            }
        }
    }
    best
}

pub fn holder_half_norm(trace: &Trace) -> Result<f64> {
    trace.require_converged()?;
    let (ts, zs) = trace.converged_points();
    Ok(holder_norm(&ts, &zs, 0.5))
}

pub fn sqrt_reparam_lip(trace: &Trace) -> Result<f64> {
    trace.require_converged()?;
    let (ts, zs) = trace.converged_points();
    Ok(sqrt_lip(&ts, &zs))
}

/// Grid p-variation of the trace (a lower bound for the true p-variation).
pub fn pvar_norm(trace: &Trace, p: f64) -> Result<f64> {
    trace.require_converged()?;
    Ok(pvar(&trace.gammas(), p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimpleCurveReport {
    pub separation: f64,
    pub min_gap: f64,
    pub at: (f64, f64),
    /// Min gap below `tol`: the curve may touch itself.
    pub flagged: bool,
}

/// Separated min-gap screen for self-intersections (a necessary condition only).
pub fn simple_curve_check(trace: &Trace, separation: f64, tol: f64) -> Result<SimpleCurveReport> {
    trace.require_converged()?;
    let (ts, zs) = trace.converged_points();
    let (d, s, t) = min_gap(&ts, &zs, separation).unwrap_or((f64::INFINITY, 0.0, 0.0));
    Ok(SimpleCurveReport { separation, min_gap: d, at: (s, t), flagged: d <= tol })
}

/// Norms of a trace, computed over converged points; `excluded` counts the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub holder_half: f64,
    pub sqrt_reparam_lip: f64,
    pub p: f64,
    /// Grid p-variation.
    pub pvar: f64,
    /// `inf Im gamma_t / sqrt t` over `t > 0`.
    pub sigma_hat: f64,
    /// `sup |Re gamma_t| / sqrt t` over `t > 0`.
    pub c_hat: f64,
    pub separation: f64,
    pub min_gap: f64,
    pub excluded: usize,
}

impl RegularityReport {
    pub fn compute(trace: &Trace, p: f64, separation: f64) -> Self {
        let (ts, zs) = trace.converged_points();
        let mut sigma_hat = f64::INFINITY;
        let mut c_hat = 0.0f64;
        for (t, z) in ts.iter().zip(&zs) {
            if *t > 0.0 {
                sigma_hat = sigma_hat.min(z.im / t.sqrt());
                c_hat = c_hat.max(z.re.abs() / t.sqrt());
            }
        }
        Self {
            holder_half: holder_norm(&ts, &zs, 0.5),
            sqrt_reparam_lip: sqrt_lip(&ts, &zs),
            p,
            pvar: pvar(&zs, p),
            sigma_hat,
            c_hat,
            separation,
            min_gap: min_gap(&ts, &zs, separation).map_or(f64::INFINITY, |g| g.0),
            excluded: trace.unconverged(),
        }
    }
}
