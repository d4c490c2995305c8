use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::{constants_for_kappa, EstimateConstants};
use crate::drivers::{decompose, Decomposition, DriverKind, DriverPath, DriverSample, FiniteEnergyDriver};
use crate::error::{LabError, Result};
use crate::flow::{backward_flow_from_values, BackwardFlow, FlowConfig};
use crate::pathint::{
    bracket_integral, bracket_lipschitz_sup_window, follmer_integral, follmer_qv_values, reversed_values,
    PartitionSequence,
};
use crate::report::{EstimateEntry, EstimateReport, ReportKind};

/// How the driver integrals are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralMode {
    /// Riemann–Stieltjes integrals, zero brackets. Finite-energy drivers only.
    Stieltjes,
    /// Left-point Föllmer sums and partition brackets.
    Follmer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathwiseOptions {
    pub mode: IntegralMode,
    pub max_levels: usize,
    /// The bracket Lipschitz constant is taken over windows of at least this fraction of `t`.
    pub gate_window: f64,
    /// Diffusivity used for the constants when the driver class fixes none
    /// (deterministic drivers); combined with the measured bracket constant by max.
    pub kappa: Option<f64>,
}

impl Default for PathwiseOptions {
    fn default() -> Self {
        Self { mode: IntegralMode::Follmer, max_levels: 6, gate_window: 0.5, kappa: None }
    }
}

impl PathwiseOptions {
    /// Stieltjes for deterministic kinds, Föllmer otherwise.
    pub fn for_kind(kind: &DriverKind) -> Self {
        let mode = if kind.is_deterministic() { IntegralMode::Stieltjes } else { IntegralMode::Follmer };
        Self { mode, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_levels == 0 {
            return Err(LabError::InvalidConfig("max_levels must be >= 1".into()));
        }
        if !(self.gate_window > 0.0 && self.gate_window <= 1.0) {
            return Err(LabError::InvalidConfig(format!("gate_window must lie in (0, 1], got {}", self.gate_window)));
        }
        Ok(())
    }
}

/// Sup of the bracket slope of `values` (a path on `{0..k}`) over windows of
/// at least `window * t`.
pub fn bracket_kappa_hat(values: &[f64], dt: f64, window: f64, max_levels: usize) -> Result<f64> {
    let k = values.len() - 1;
    let parts = PartitionSequence::standard(k, max_levels)?;
    let qv = follmer_qv_values(values, dt, &parts, k)?;
    Ok(bracket_lipschitz_sup_window(&qv, window * k as f64 * dt))
}

/// `int Gdot dX` and `int Gdot^2 d[X]` along a flow.
struct DriverIntegrals {
    m: f64,
    gsq_bracket: f64,
    cauchy: Option<f64>,
}

fn trapezoid_stieltjes(v: &[f64], x: &[f64]) -> f64 {
    v.windows(2).zip(x.windows(2)).map(|(a, b)| 0.5 * (a[0] + a[1]) * (b[1] - b[0])).sum()
}

fn driver_integrals(flow: &BackwardFlow, x: &[f64], mode: IntegralMode, max_levels: usize, x_is_beta: bool) -> Result<DriverIntegrals> {
    let k = flow.anchor;
    match mode {
        IntegralMode::Stieltjes => {
            let m = if x_is_beta { *flow.gdot_dbeta_integral.last().unwrap() } else { trapezoid_stieltjes(&flow.gdot, x) };
            Ok(DriverIntegrals { m, gsq_bracket: 0.0, cauchy: None })
        }
        IntegralMode::Follmer => {
            let parts = PartitionSequence::standard(k, max_levels)?;
            let m = follmer_integral(&flow.gdot, x, &parts, k)?;
            let sq: Vec<f64> = flow.gdot.iter().map(|g| g * g).collect();
            let br = bracket_integral(&sq, x, &parts, k)?;
            let cauchy = match (m.cauchy_gap, br.cauchy_gap) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            Ok(DriverIntegrals { m: m.value, gsq_bracket: br.value, cauchy })
        }
    }
}

fn t_indices(ts: &[f64], path: &DriverPath) -> Result<Vec<(usize, f64)>> {
    ts.iter()
        .map(|&t| {
            let k = path.grid().index_of(t)?;
            if k == 0 {
                return Err(LabError::InvalidConfig("t must be > 0".into()));
            }
            Ok((k, t))
        })
        .collect()
}

/// `|f_t'(iy + U_t)| <= exp(M_t - int Gdot^2 dr - 1/2 int Gdot^2 d[beta])`
/// over the `(t, y)` matrix, in log form. Gated when the bracket constant of
/// `beta` at some `t` reaches 2.
pub fn check_keyest(
    u: &DriverPath,
    ts: &[f64],
    ys: &[f64],
    opts: &PathwiseOptions,
    flow: &FlowConfig,
    slack: f64,
) -> Result<EstimateReport> {
    opts.validate()?;
    let dt = u.grid().dt();
    let tk = t_indices(ts, u)?;
    let mut kappa_max: f64 = 0.0;
    for &(k, _) in &tk {
        if opts.mode == IntegralMode::Follmer {
            let kh = bracket_kappa_hat(&reversed_values(u, k), dt, opts.gate_window, opts.max_levels)?;
            kappa_max = kappa_max.max(kh);
        }
    }
    if kappa_max >= 2.0 {
        let mut r = EstimateReport::gated("keyest", ReportKind::Inequality, slack, format!("bracket constant {kappa_max:.4} >= 2"));
        r.term("kappa_hat", kappa_max);
        return Ok(r);
    }
    let jobs: Vec<(usize, f64, f64)> = tk.iter().flat_map(|&(k, t)| ys.iter().map(move |&y| (k, t, y))).collect();
    let entries: Vec<(EstimateEntry, [f64; 3])> = jobs
        .par_iter()
        .map(|&(k, t, y)| {
            let beta = reversed_values(u, k);
            let fl = backward_flow_from_values(&beta, dt, 0.0, y, flow)?;
            let di = driver_integrals(&fl, &beta, opts.mode, opts.max_levels, true)?;
            let gsq_dr = *fl.gdot_sq_integral.last().unwrap();
            let rhs = di.m - gsq_dr - 0.5 * di.gsq_bracket;
            Ok((EstimateEntry::new(t, 0.0, y, fl.logfp(), rhs).with_cauchy(di.cauchy), [di.m, gsq_dr, di.gsq_bracket]))
        })
        .collect::<Result<_>>()?;
    let mut report = EstimateReport::new("keyest", ReportKind::Inequality, slack);
    for (e, [m, gsq, br]) in entries {
        report.term("m", m);
        report.term("gdot_sq_dr", gsq);
        report.term("gdot_sq_dbracket", br);
        report.push(e);
    }
    report.term("kappa_hat", kappa_max);
    Ok(report)
}

/// `b log|f_t'(iy + U_t)| <= b M^N_t - (p b^2 / 2) int Gdot^2 d[N] + (b / 4 eps) ||A||_t^2`
/// for the canonical decomposition of the sample's reversed driver.
/// Constants come from the larger of the measured bracket constant of `N`
/// and the class diffusivity (or `opts.kappa` for deterministic kinds).
pub fn check_key1(
    kind: &DriverKind,
    sample: &DriverSample,
    ts: &[f64],
    ys: &[f64],
    opts: &PathwiseOptions,
    flow: &FlowConfig,
    slack: f64,
) -> Result<EstimateReport> {
    opts.validate()?;
    let u = &sample.path;
    let dt = u.grid().dt();
    let tk = t_indices(ts, u)?;
    let decs: Vec<Decomposition> = tk.iter().map(|&(k, _)| decompose(kind, sample, k)).collect::<Result<_>>()?;
    let mut kappa_hat: f64 = 0.0;
    if !kind.is_deterministic() {
        for d in &decs {
            kappa_hat = kappa_hat.max(bracket_kappa_hat(&d.martingale, dt, opts.gate_window, opts.max_levels)?);
        }
    }
    let nominal = if kind.is_deterministic() {
        opts.kappa.unwrap_or(1.0)
    } else {
        opts.kappa.or_else(|| kind.nominal_kappa(u.grid().horizon())).unwrap_or(0.0)
    };
    let kappa = kappa_hat.max(nominal);
    if kappa_hat >= 2.0 || kappa >= 2.0 {
        let mut r = EstimateReport::gated("key1", ReportKind::Inequality, slack, format!("kappa {kappa:.4} >= 2"));
        r.term("kappa_hat", kappa_hat);
        return Ok(r);
    }
    let c = constants_for_kappa(kappa)?;
    let jobs: Vec<(usize, f64, f64)> =
        tk.iter().enumerate().flat_map(|(i, &(_, t))| ys.iter().map(move |&y| (i, t, y))).collect();
    let entries: Vec<EstimateEntry> = jobs
        .par_iter()
        .map(|&(i, t, y)| {
            let d = &decs[i];
            let fl = backward_flow_from_values(&d.beta, dt, 0.0, y, flow)?;
            let di = driver_integrals(&fl, &d.martingale, opts.mode, opts.max_levels, false)?;
            Ok(EstimateEntry::new(t, 0.0, y, c.b * fl.logfp(), key1_log_rhs(&c, di.m, di.gsq_bracket, d.energy))
                .with_cauchy(di.cauchy))
        })
        .collect::<Result<_>>()?;
    let mut report = EstimateReport::new("key1", ReportKind::Inequality, slack);
    for e in entries {
        report.push(e);
    }
    report.term("kappa_hat", kappa_hat);
    report.term("kappa", c.kappa);
    report.term("b", c.b);
    report.term("p", c.p);
    report.term("eps", c.eps);
    report.term("energy", decs.last().map_or(0.0, |d| d.energy));
    Ok(report)
}

pub fn key1_log_rhs(c: &EstimateConstants, m_n: f64, gsq_dn: f64, energy: f64) -> f64 {
    c.b * m_n - 0.5 * c.p * c.b * c.b * gsq_dn + c.b / (4.0 * c.eps) * energy
}

/// `(int Gdot dA, eps int Gdot^2 dr + ||A||^2 / (4 eps))` with both integrals
/// taken by the trapezoid rule on the grid of the drift.
pub fn young_split(flow: &BackwardFlow, a: &FiniteEnergyDriver, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(LabError::InvalidConfig(format!("eps must be > 0, got {eps}")));
    }
    let k = flow.anchor;
    if a.grid().steps() != k {
        return Err(LabError::LengthMismatch { expected: k, got: a.grid().steps() });
    }
    let dt = flow.dt;
    let mut lhs = 0.0;
    let mut gsq = 0.0;
    for (j, adot) in a.hdot().iter().enumerate() {
        let (g0, g1) = (flow.gdot[j], flow.gdot[j + 1]);
        lhs += 0.5 * (g0 + g1) * adot * dt;
        gsq += 0.5 * (g0 * g0 + g1 * g1) * dt;
    }
    Ok((lhs, eps * gsq + a.total_energy() / (4.0 * eps)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{sample_driver_detailed, TimeGrid};

    #[test]
    fn zero_driver_keyest_is_explicit() {
        let u = DriverPath::zero(TimeGrid::new(1.0, 256).unwrap());
        let opts = PathwiseOptions { mode: IntegralMode::Stieltjes, ..Default::default() };
        let r = check_keyest(&u, &[0.5, 1.0], &[1.0, 0.1], &opts, &FlowConfig::rk4(4), 1e-3).unwrap();
        for e in &r.entries {
            // RHS = -int 4Y^2/(Y^2)^2 ... = -int Gdot^2 dr = 0 since X = 0
            assert!(e.log_rhs.abs() < 1e-12);
            let exact = 0.5 * (e.y * e.y / (e.y * e.y + 4.0 * e.t)).ln();
            assert!((e.log_lhs - exact).abs() < 1e-6);
        }
        assert!(r.pass);
    }

    #[test]
    fn finite_energy_keyest_and_key1() {
        let kind = DriverKind::FiniteEnergy { slopes: vec![2.0, -1.0, 0.5] };
        let s = sample_driver_detailed(&kind, TimeGrid::new(1.0, 1024).unwrap(), 0).unwrap();
        let opts = PathwiseOptions::for_kind(&kind);
        let flow = FlowConfig::rk4(4);
        let r = check_keyest(&s.path, &[0.5, 1.0], &[1.0, 0.1, 0.01], &opts, &flow, 1e-3).unwrap();
        assert!(r.pass, "{}", r.min_margin);
        let r1 = check_key1(&kind, &s, &[0.5, 1.0], &[1.0, 0.1, 0.01], &opts, &flow, 1e-3).unwrap();
        assert!(r1.pass, "{}", r1.min_margin);
    }

    #[test]
    fn brownian_key1_dominates_keyest_power() {
        let kind = DriverKind::Brownian { kappa: 1.0 };
        let s = sample_driver_detailed(&kind, TimeGrid::new(1.0, 1 << 12).unwrap(), 3).unwrap();
        let opts = PathwiseOptions::for_kind(&kind);
        let flow = FlowConfig::slit(1);
        let k = check_keyest(&s.path, &[1.0], &[0.3], &opts, &flow, 5e-2).unwrap();
        let k1 = check_key1(&kind, &s, &[1.0], &[0.3], &opts, &flow, 5e-2).unwrap();
        let b = k1.terms["b"];
        let (e, e1) = (&k.entries[0], &k1.entries[0]);
        assert!((e1.log_lhs - b * e.log_lhs).abs() < 1e-9);
        assert!(e1.log_rhs >= b * e.log_rhs, "{} {}", e1.log_rhs, b * e.log_rhs);
    }

    #[test]
    fn young_split_holds() {
        let h = FiniteEnergyDriver::piecewise_slopes(TimeGrid::new(1.0, 512).unwrap(), &[3.0, -2.0]).unwrap();
        let beta = reversed_values(h.path(), 512);
        let fl = backward_flow_from_values(&beta, h.grid().dt(), 0.0, 0.2, &FlowConfig::rk4(2)).unwrap();
        let a = h.reversed(512).unwrap();
        for eps in [0.1, 0.25, 1.0] {
            let (l, r) = young_split(&fl, &a, eps).unwrap();
            assert!(l <= r, "{l} {r}");
        }
    }
}
