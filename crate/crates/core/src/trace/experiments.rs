use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::extract::{extract_trace_at, TraceConfig};
use super::regularity::{holder_norm, pvar};
use crate::drivers::{time_reverse_index, DriverPath};
use crate::error::{LabError, Result};
use crate::flow::{integrate_light, FlowConfig};
use crate::report::{EstimateEntry, EstimateReport, ReportKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeEntry {
    pub t: f64,
    pub y: f64,
    pub f: Complex64,
    /// `sqrt(y^2 + 4t)`.
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeReport {
    pub holder_half: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gated: Option<String>,
    pub entries: Vec<ConeEntry>,
    /// `max Im f / sqrt(y^2 + 4t)`.
    pub max_upper_ratio: f64,
    pub upper_bound_holds: bool,
    /// `inf Im f / sqrt t`.
    pub sigma_hat: f64,
    /// `sup |Re f| / sqrt t`.
    pub c_hat: f64,
}

/// `Im f_t(iy + U_t)` between `sigma sqrt t` and `sqrt(y^2 + 4t)`, for drivers
/// with grid 1/2-Hölder norm below 4.
pub fn cone_check(u: &DriverPath, ys: &[f64], ts: &[f64], flow: &FlowConfig, slack: f64) -> Result<ConeReport> {
    let holder_half = u.holder_half_norm();
    let mut rep = ConeReport {
        holder_half,
        gated: None,
        entries: Vec::new(),
        max_upper_ratio: 0.0,
        upper_bound_holds: true,
        sigma_hat: f64::INFINITY,
        c_hat: 0.0,
    };
    if !(holder_half < 4.0) {
        rep.gated = Some(format!("driver 1/2-Hölder norm {holder_half} is not below 4"));
        rep.upper_bound_holds = false;
        return Ok(rep);
    }
    for &t in ts {
        let k = u.grid().index_of(t)?;
        if k == 0 {
            continue;
        }
        let beta = time_reverse_index(u, k)?.into_path();
        for &y in ys {
            if !(y > 0.0) {
                return Err(LabError::InvalidPoint(format!("y must be > 0, got {y}")));
            }
            let (p, _) = integrate_light(beta.values(), u.grid().dt(), Complex64::new(0.0, y), flow);
            let f = p + u.value(k);
            let upper = (y * y + 4.0 * t).sqrt();
            rep.max_upper_ratio = rep.max_upper_ratio.max(f.im / upper);
            rep.sigma_hat = rep.sigma_hat.min(f.im / t.sqrt());
            rep.c_hat = rep.c_hat.max(f.re.abs() / t.sqrt());
            rep.entries.push(ConeEntry { t, y, f, upper });
        }
    }
    rep.upper_bound_holds = rep.max_upper_ratio <= 1.0 + slack;
    Ok(rep)
}

const GL4_NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// `v(t, y) = int_0^y |f_t'(ir + U_t)| dr` by 4-point Gauss–Legendre on the
/// dyadic panels `[y 2^-(j+1), y 2^-j]`, `j < panels`, plus the tail
/// `r |f'(ir)|` at the last panel end. Returns `(v, |f_t'(iy + U_t)|)`.
pub fn v_integral(beta: &[f64], dt: f64, y: f64, panels: usize, flow: &FlowConfig) -> (f64, f64) {
    let fp = |r: f64| integrate_light(beta, dt, Complex64::new(0.0, r), flow).1.norm();
    let mut v = 0.0;
    let mut hi = y;
    for _ in 0..panels {
        let lo = 0.5 * hi;
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        v += half * GL4_NODES.iter().zip(GL4_WEIGHTS).map(|(x, w)| w * fp(mid + half * x)).sum::<f64>();
        hi = lo;
    }
    (v + hi * fp(hi), fp(y))
}

/// Koebe quarter bound `v(t, y) >= (y/4) |f_t'(iy + U_t)|` at every `(t, y)`.
pub fn koebe_check(u: &DriverPath, ts: &[f64], ys: &[f64], flow: &FlowConfig, slack: f64) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new("koebe", ReportKind::Inequality, slack);
    for &t in ts {
        let k = u.grid().index_of(t)?;
        if k == 0 {
            continue;
        }
        let beta = time_reverse_index(u, k)?.into_path();
        for &y in ys {
            let (v, fp) = v_integral(beta.values(), u.grid().dt(), y, 24, flow);
            rep.push(EstimateEntry::new(t, 0.0, y, (0.25 * y * fp).ln(), v.ln()));
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityConfig {
    /// Hölder exponent of the difference norm (below 1/2).
    pub alpha: f64,
    /// Variation exponent is `1 + eps`.
    pub eps: f64,
    /// Refuse when some driver's grid energy `sum du^2 / dt` exceeds this.
    pub energy_cap: f64,
    /// Required decay of each column per halving of the driver distance.
    pub decay_factor: f64,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        Self { alpha: 0.25, eps: 0.5, energy_cap: 100.0, decay_factor: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub index: usize,
    /// `||U^n - U||_inf`.
    pub driver_dist: f64,
    pub energy: f64,
    pub sup_dist: f64,
    pub holder_dist: f64,
    pub pvar_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityTable {
    pub config: ContinuityConfig,
    pub base_energy: f64,
    pub rows: Vec<ContinuityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refused: Option<String>,
    pub decay_ok: bool,
    /// Points excluded because some trace did not converge there.
    pub excluded: usize,
}

/// Grid energy `sum (du)^2 / dt` of the piecewise-linear path.
pub fn grid_energy(u: &DriverPath) -> f64 {
    let dt = u.grid().dt();
    u.increments().iter().map(|d| d * d / dt).sum()
}

/// Distances between the traces of `seq[n]` and of `u` in sup, alpha-Hölder
/// and (1+eps)-variation norms.
pub fn continuity_experiment(
    u: &DriverPath,
    seq: &[DriverPath],
    cfg: &ContinuityConfig,
    trace_cfg: &TraceConfig,
    flow: &FlowConfig,
) -> Result<ContinuityTable> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 0.5 && cfg.eps > 0.0 && cfg.decay_factor >= 1.0) {
        return Err(LabError::InvalidConfig("continuity needs 0 < alpha < 1/2, eps > 0, decay_factor >= 1".into()));
    }
    let base_energy = grid_energy(u);
    let mut table =
        ContinuityTable { config: *cfg, base_energy, rows: Vec::new(), refused: None, decay_ok: true, excluded: 0 };
    let energies: Vec<f64> = seq.iter().map(grid_energy).collect();
    let worst = energies.iter().copied().fold(base_energy, f64::max);
    if !(worst <= cfg.energy_cap) {
        table.refused = Some(format!("driver energy {worst} exceeds the cap {}", cfg.energy_cap));
        table.decay_ok = false;
        return Ok(table);
    }
    let n = u.grid().steps();
    let mut idx: Vec<usize> = (0..=n).step_by(trace_cfg.stride.max(1)).collect();
    if *idx.last().unwrap() != n {
        idx.push(n);
    }
    let base = extract_trace_at(u, &idx, trace_cfg, flow)?;
    for (i, (un, e)) in seq.iter().zip(&energies).enumerate() {
        if un.grid() != u.grid() {
            return Err(LabError::InvalidGrid("continuity sequence must share the base grid".into()));
        }
        let tr = extract_trace_at(un, &idx, trace_cfg, flow)?;
        let mut ts = Vec::new();
        let mut ds = Vec::new();
        for (a, b) in base.points.iter().zip(&tr.points) {
            if a.converged && b.converged {
                ts.push(a.t);
                ds.push(b.gamma - a.gamma);
            } else {
                table.excluded += 1;
            }
        }
        let driver_dist = un.values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        table.rows.push(ContinuityRow {
            index: i,
            driver_dist,
            energy: *e,
            sup_dist: ds.iter().map(|d| d.norm()).fold(0.0, f64::max),
            holder_dist: holder_norm(&ts, &ds, cfg.alpha),
            pvar_dist: pvar(&ds, 1.0 + cfg.eps),
        });
    }
    table.decay_ok = decay_holds(&table.rows, cfg.decay_factor);
    Ok(table)
}

fn decay_holds(rows: &[ContinuityRow], factor: f64) -> bool {
    rows.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.driver_dist == 0.0 {
            return [b.sup_dist, b.holder_dist, b.pvar_dist].iter().all(|&x| x == 0.0);
        }
        let halvings = (a.driver_dist / b.driver_dist).log2();
        let need = factor.powf(halvings);
        [(a.sup_dist, b.sup_dist), (a.holder_dist, b.holder_dist), (a.pvar_dist, b.pvar_dist)]
            .iter()
            .all(|&(x, y)| x == 0.0 && y == 0.0 || y * need <= x)
    })
}
