use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::constants::{constants_for_kappa, EstimateConstants};
use crate::drivers::{
    decompose, path_seed, sample_driver_detailed, BuiltinFunctional, DriverKind, Functional, TimeGrid,
};
use crate::error::{LabError, Result};
use crate::flow::{backward_flow_from_values, eval_f_with_derivative_index, FlowConfig};
use crate::stats::{least_squares, RunningStats};

/// Proxy means may exceed 1 by this many 95% half-widths before the
/// supermartingale check fails.
pub const PROXY_CI_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEntry {
    pub t: f64,
    pub y: f64,
    /// Empirical `E |f_t'(iy + U_t)|^b`.
    pub mean: f64,
    pub ci95: f64,
    /// Empirical mean of `exp(pb int Gdot dN - (pb)^2/2 int Gdot^2 d[N])`.
    pub proxy_mean: f64,
    pub proxy_ci95: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YRatio {
    pub t: f64,
    /// Max over min of the means across `y`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub constants: EstimateConstants,
    pub b: f64,
    pub n_paths: u64,
    pub base_seed: u64,
    pub entries: Vec<MomentEntry>,
    pub y_ratios: Vec<YRatio>,
    pub max_y_ratio: f64,
    /// Largest `ci95 / mean` over entries.
    pub max_rel_ci: f64,
    pub all_finite: bool,
    /// Every proxy mean is at most `1 + PROXY_CI_FACTOR * ci95`.
    pub proxy_ok: bool,
}

/// Monte Carlo estimate of `E |f_t'(iy + U_t)|^b` and of the stochastic
/// exponential proxy over the `(t, y)` matrix. Paths use
/// `path_seed(base_seed, i)`; the reduction is sequential in path order so
/// results do not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn mc_moment(
    kind: &DriverKind,
    grid: TimeGrid,
    constants: &EstimateConstants,
    ts: &[f64],
    ys: &[f64],
    n_paths: u64,
    base_seed: u64,
    flow: &FlowConfig,
) -> Result<MomentReport> {
    kind.validate()?;
    if n_paths < 2 {
        return Err(LabError::InvalidConfig("need at least two paths".into()));
    }
    if ys.iter().any(|y| !(*y > 0.0)) {
        return Err(LabError::InvalidPoint("y must be > 0".into()));
    }
    let ks: Vec<usize> = ts.iter().map(|&t| grid.index_of(t)).collect::<Result<_>>()?;
    if ks.contains(&0) {
        return Err(LabError::InvalidConfig("t must be > 0".into()));
    }
    let b = constants.b;
    let lam = constants.p * b;
    let dt = grid.dt();
    let per_path: Vec<Vec<(f64, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let sample = sample_driver_detailed(kind, grid, path_seed(base_seed, i))?;
            let mut out = Vec::with_capacity(ks.len() * ys.len());
            for &k in &ks {
                let d = decompose(kind, &sample, k)?;
                for &y in ys {
                    let fl = backward_flow_from_values(&d.beta, dt, 0.0, y, flow)?;
                    let mut s = 0.0;
                    for j in 0..k {
                        let dn = d.martingale[j + 1] - d.martingale[j];
                        let g = fl.gdot[j];
                        s += lam * g * dn - 0.5 * lam * lam * g * g * dn * dn;
                    }
                    out.push(((b * fl.logfp()).exp(), s.exp()));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let cells = ks.len() * ys.len();
    let mut acc = vec![(RunningStats::new(), RunningStats::new()); cells];
    for row in &per_path {
        for (a, &(fb, px)) in acc.iter_mut().zip(row) {
            a.0.push(fb);
            a.1.push(px);
        }
    }
    let mut entries = Vec::with_capacity(cells);
    for (i, &t) in ts.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let (m, p) = &acc[i * ys.len() + j];
            entries.push(MomentEntry {
                t,
                y,
                mean: m.mean,
                ci95: m.ci95(),
                proxy_mean: p.mean,
                proxy_ci95: p.ci95(),
                count: m.count,
            });
        }
    }
    let y_ratios: Vec<YRatio> = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let row = &entries[i * ys.len()..(i + 1) * ys.len()];
            let hi = row.iter().map(|e| e.mean).fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min);
            YRatio { t, ratio: hi / lo }
        })
        .collect();
    let max_y_ratio = y_ratios.iter().map(|r| r.ratio).fold(1.0, f64::max);
    let max_rel_ci = entries.iter().map(|e| e.ci95 / e.mean).fold(0.0, f64::max);
    let all_finite = entries.iter().all(|e| e.mean.is_finite() && e.ci95.is_finite());
    let proxy_ok = entries.iter().all(|e| e.proxy_mean <= 1.0 + PROXY_CI_FACTOR * e.proxy_ci95);
    Ok(MomentReport {
        constants: *constants,
        b,
        n_paths,
        base_seed,
        entries,
        y_ratios,
        max_y_ratio,
        max_rel_ci,
        all_finite,
        proxy_ok,
    })
}

/// `E exp(lambda int_0^T B_r^2 dr) = cos(T sqrt(2 lambda))^{-1/2}` for `T sqrt(2 lambda) < pi/2`.
pub fn brownian_square_moment(lambda: f64, horizon: f64) -> Option<f64> {
    let a = horizon * (2.0 * lambda).sqrt();
    (a < std::f64::consts::FRAC_PI_2).then(|| 1.0 / a.cos().sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalMomentReport {
    pub functional: BuiltinFunctional,
    pub alpha: f64,
    pub horizon: f64,
    pub steps: usize,
    pub n_paths: u64,
    pub seed: u64,
    /// Empirical `E exp(alpha Z)`, `Z = int_0^T {Fdot - F''/2 + F' B_r / r}^2 dr`.
    pub mean: f64,
    pub ci95: f64,
    pub log_mean: f64,
    /// Share of the sum carried by the largest tenth of the samples.
    pub top_decile_share: f64,
    /// Closed form where one is known.
    pub oracle: Option<f64>,
    pub finite: bool,
}

/// Integrand of the exponential-moment condition at `(r, B_r)`. The `F' B/r`
/// term is dropped for space-independent `F'`, matching the decomposition.
/// At `r = 0` the path sits at 0 and a non-finite value (`0^{p-1} * 0`) is read as 0.
pub fn moment_integrand(f: &dyn Functional, r: f64, x: f64) -> f64 {
    if r == 0.0 {
        let v = f.dt(0.0, x) - 0.5 * f.dxx(0.0, x);
        return if v.is_finite() { v } else { 0.0 };
    }
    let mut v = f.dt(r, x) - 0.5 * f.dxx(r, x);
    if !f.dx_space_independent() {
        v += f.dx(r, x) * x / r;
    }
    v
}

/// Monte Carlo estimate of the exponential moment of the drift energy of
/// `F(t, B_t)`. `alpha = None` uses the Hölder level of the constants for
/// `kappa = sup |F'|^2` on `[0, T]`.
pub fn check_momentof_f(
    f: &BuiltinFunctional,
    alpha: Option<f64>,
    horizon: f64,
    steps: usize,
    n_paths: u64,
    seed: u64,
) -> Result<FunctionalMomentReport> {
    f.validate()?;
    let grid = TimeGrid::new(horizon, steps)?;
    let alpha = match alpha {
        Some(a) if a >= 0.0 && a.is_finite() => a,
        Some(a) => return Err(LabError::InvalidConfig(format!("alpha must be >= 0, got {a}"))),
        None => constants_for_kappa(f.dx_sq_bound(horizon))?.moment_alpha(),
    };
    if n_paths < 10 {
        return Err(LabError::InvalidConfig("need at least ten paths".into()));
    }
    let dt = grid.dt();
    let sd = dt.sqrt();
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(path_seed(seed, i));
            let mut x = 0.0;
            let mut prev = moment_integrand(f, 0.0, 0.0).powi(2);
            let mut z = 0.0;
            for j in 1..=steps {
                let e: f64 = StandardNormal.sample(&mut rng);
                x += sd * e;
                let cur = moment_integrand(f, grid.time(j), x).powi(2);
                z += 0.5 * (prev + cur) * dt;
                prev = cur;
            }
            (alpha * z).exp()
        })
        .collect();
    let stats = RunningStats::from_slice(&samples);
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = sorted.iter().sum();
    let top = sorted.len().div_ceil(10);
    let top_decile_share = sorted[..top].iter().sum::<f64>() / total;
    let oracle = match *f {
        BuiltinFunctional::Linear { .. } => Some(1.0),
        BuiltinFunctional::TPowP { p: 1.0 } => brownian_square_moment(alpha, horizon),
        _ => None,
    };
    let mean = stats.mean;
    Ok(FunctionalMomentReport {
        functional: *f,
        alpha,
        horizon,
        steps,
        n_paths,
        seed,
        mean,
        ci95: stats.ci95(),
        log_mean: mean.ln(),
        top_decile_share,
        oracle,
        finite: mean.is_finite(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub m: u32,
    pub y: f64,
    /// `y^{-theta}`.
    pub threshold: f64,
    pub exceedances: u64,
    pub trials: u64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTable {
    pub theta: f64,
    pub b_target: f64,
    pub n_paths: u64,
    pub base_seed: u64,
    pub ts: Vec<f64>,
    pub rows: Vec<TailRow>,
    /// Levels with at least [`MIN_EXCEEDANCES`] exceedances.
    pub fitted_levels: Vec<u32>,
    /// Least-squares slope of `log P` against `log y`.
    pub slope: Option<f64>,
    pub pass: bool,
}

pub const MIN_EXCEEDANCES: u64 = 10;

/// Exceedance frequencies of `|f_t'(i 2^{-m} + U_t)| >= 2^{m theta}` for
/// `m` in `levels`, on a grid with `2^{2 max m}` steps over `[0, horizon]`.
#[allow(clippy::too_many_arguments)]
pub fn grid_tail_prob(
    kind: &DriverKind,
    horizon: f64,
    ts: &[f64],
    theta: f64,
    b_target: f64,
    n_paths: u64,
    levels: std::ops::RangeInclusive<u32>,
    base_seed: u64,
    flow: &FlowConfig,
) -> Result<TailTable> {
    kind.validate()?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(LabError::InvalidConfig(format!("theta must lie in (0, 1), got {theta}")));
    }
    if levels.is_empty() || *levels.end() > 12 {
        return Err(LabError::InvalidConfig("levels must be a non-empty range within 0..=12".into()));
    }
    let ms: Vec<u32> = levels.collect();
    let grid = TimeGrid::new(horizon, 1usize << (2 * ms.last().unwrap()))?;
    let ks: Vec<usize> = ts.iter().map(|&t| grid.index_of(t)).collect::<Result<_>>()?;
    let hits: Vec<Vec<u64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let u = sample_driver_detailed(kind, grid, path_seed(base_seed, i))?.path;
            ms.iter()
                .map(|&m| {
                    let y = (-(m as f64)).exp2();
                    let thr = y.powf(-theta);
                    let mut c = 0;
                    for &k in &ks {
                        let (_, d) = eval_f_with_derivative_index(&u, num_complex::Complex64::new(0.0, y), k, flow)?;
                        if d.norm() >= thr {
                            c += 1;
                        }
                    }
                    Ok(c)
                })
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<_>>()?;
    let trials = n_paths * ks.len() as u64;
    let rows: Vec<TailRow> = ms
        .iter()
        .enumerate()
        .map(|(li, &m)| {
            let y = (-(m as f64)).exp2();
            let exceedances = hits.iter().map(|h| h[li]).sum();
            TailRow { m, y, threshold: y.powf(-theta), exceedances, trials, prob: exceedances as f64 / trials as f64 }
        })
        .collect();
    let fit: Vec<&TailRow> = rows.iter().filter(|r| r.exceedances >= MIN_EXCEEDANCES).collect();
    let slope = if fit.len() >= 2 {
        let lx: Vec<f64> = fit.iter().map(|r| r.y.ln()).collect();
        let ly: Vec<f64> = fit.iter().map(|r| r.prob.ln()).collect();
        least_squares(&lx, &ly).map(|(_, s)| s)
    } else {
        None
    };
    Ok(TailTable {
        theta,
        b_target,
        n_paths,
        base_seed,
        ts: ts.to_vec(),
        fitted_levels: fit.iter().map(|r| r.m).collect(),
        rows,
        slope,
        pass: slope.is_some_and(|s| s >= b_target - 0.5),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_driver_moment_is_exact() {
        let c = constants_for_kappa(1.0).unwrap();
        let g = TimeGrid::new(1.0, 64).unwrap();
        let r = mc_moment(&DriverKind::Zero, g, &c, &[0.25, 1.0], &[1.0, 0.1], 4, 1, &FlowConfig::slit(1)).unwrap();
        for e in &r.entries {
            let exact = (e.y * e.y / (e.y * e.y + 4.0 * e.t)).powf(c.b / 2.0);
            assert!((e.mean - exact).abs() < 1e-9 * exact);
            assert_eq!(e.ci95, 0.0);
            assert_eq!(e.proxy_mean, 1.0);
        }
        assert!(r.proxy_ok);
    }

    #[test]
    fn moment_runs_are_reproducible() {
        let c = constants_for_kappa(1.0).unwrap();
        let g = TimeGrid::new(1.0, 256).unwrap();
        let kind = DriverKind::Brownian { kappa: 1.0 };
        let a = mc_moment(&kind, g, &c, &[1.0], &[0.5], 16, 9, &FlowConfig::slit(1)).unwrap();
        let b = mc_moment(&kind, g, &c, &[1.0], &[0.5], 16, 9, &FlowConfig::slit(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_values() {
        assert_eq!(brownian_square_moment(0.0, 1.0), Some(1.0));
        assert!(brownian_square_moment(2.0, 1.0).is_none());
    }

    #[test]
    fn linear_functional_moment_is_one() {
        let r = check_momentof_f(&BuiltinFunctional::Linear { kappa: 1.5 }, None, 1.0, 64, 100, 0).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.ci95, 0.0);
    }

    #[test]
    fn zero_driver_never_exceeds() {
        let t = grid_tail_prob(&DriverKind::Zero, 1.0, &[1.0], 0.9, 2.5, 3, 1..=4, 0, &FlowConfig::slit(1)).unwrap();
        assert!(t.rows.iter().all(|r| r.exceedances == 0));
        assert!(t.slope.is_none() && !t.pass);
    }
}
