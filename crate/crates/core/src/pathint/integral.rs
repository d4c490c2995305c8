use serde::Serialize;

use super::partition::PartitionSequence;
use crate::error::{LabError, Result};
use crate::flow::BackwardFlow;

/// Level-wise values of a partition sum, coarsest first. The finest level is
/// the reported value; the Cauchy certificate is the larger of the last two
/// successive level differences (a heuristic for stochastic paths).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub levels: Vec<f64>,
    pub value: f64,
    pub cauchy_gap: Option<f64>,
}

impl LimitEstimate {
    pub fn from_levels(levels: Vec<f64>) -> Self {
        let value = *levels.last().unwrap();
        let diffs: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let cauchy_gap = match diffs.len() {
            0 => None,
            1 => Some(diffs[0]),
            n => Some(diffs[n - 1].max(diffs[n - 2])),
        };
        Self { levels, value, cauchy_gap }
    }

    /// Successive level differences `|L_{l+1} - L_l|`.
    pub fn differences(&self) -> Vec<f64> {
        self.levels.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }
}

fn check_lengths(parts: &PartitionSequence, k: usize, slices: &[&[f64]]) -> Result<()> {
    let len = slices[0].len();
    for s in slices {
        if s.len() != len {
            return Err(LabError::LengthMismatch { expected: len, got: s.len() });
        }
    }
    parts.check_anchor(k, len)
}

fn per_level(parts: &PartitionSequence, k: usize, cell: impl Fn(usize, usize) -> f64) -> LimitEstimate {
    let levels = (0..parts.level_count()).map(|l| parts.cells(l, k).map(|(a, b)| cell(a, b)).sum()).collect();
    LimitEstimate::from_levels(levels)
}

/// Left-point sums `sum V_u (X_v - X_u)` along each level, up to index `k`.
pub fn follmer_integral(v: &[f64], x: &[f64], parts: &PartitionSequence, k: usize) -> Result<LimitEstimate> {
    check_lengths(parts, k, &[v, x])?;
    Ok(per_level(parts, k, |a, b| v[a] * (x[b] - x[a])))
}

/// Compensated sums `sum Gdot_s (b_t - b_s) + Gdot'_s (b_t - b_s)^2 / 2`.
pub fn rough_integral(gdot: &[f64], gdot_prime: &[f64], beta: &[f64], parts: &PartitionSequence, k: usize) -> Result<LimitEstimate> {
    check_lengths(parts, k, &[gdot, gdot_prime, beta])?;
    Ok(per_level(parts, k, |a, b| {
        let d = beta[b] - beta[a];
        gdot[a] * d + 0.5 * gdot_prime[a] * d * d
    }))
}

/// Left-point sums against the bracket increments, `sum V_u (X_v - X_u)^2`.
pub fn bracket_integral(v: &[f64], x: &[f64], parts: &PartitionSequence, k: usize) -> Result<LimitEstimate> {
    check_lengths(parts, k, &[v, x])?;
    Ok(per_level(parts, k, |a, b| {
        let d = x[b] - x[a];
        v[a] * d * d
    }))
}

/// Trapezoid Riemann–Stieltjes sums `sum (V_u + V_v)/2 (X_v - X_u)`.
pub fn stieltjes_integral(v: &[f64], x: &[f64], parts: &PartitionSequence, k: usize) -> Result<LimitEstimate> {
    check_lengths(parts, k, &[v, x])?;
    Ok(per_level(parts, k, |a, b| 0.5 * (v[a] + v[b]) * (x[b] - x[a])))
}

/// Trapezoid sums of `int V dr` on the partition cells, grid step `dt`.
pub fn time_integral(v: &[f64], dt: f64, parts: &PartitionSequence, k: usize) -> Result<LimitEstimate> {
    check_lengths(parts, k, &[v])?;
    Ok(per_level(parts, k, |a, b| 0.5 * (v[a] + v[b]) * (b - a) as f64 * dt))
}

/// All pathwise integrals of the reversed flow that enter the derivative
/// representation and the moment estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralReport {
    /// Föllmer–Itô `M^pi_t = int Gdot d^pi beta`.
    pub follmer: LimitEstimate,
    /// Compensated rough integral `M_t`.
    pub rough: LimitEstimate,
    /// Trapezoid Riemann–Stieltjes `int Gdot dbeta`.
    pub stieltjes: LimitEstimate,
    pub gdot_sq_dr: LimitEstimate,
    pub gdot_sq_dbracket: LimitEstimate,
    pub gdot_prime_dbracket: LimitEstimate,
}

impl IntegralReport {
    pub fn max_cauchy(&self) -> Option<f64> {
        [&self.follmer, &self.rough, &self.gdot_sq_dbracket, &self.gdot_prime_dbracket]
            .iter()
            .filter_map(|e| e.cauchy_gap)
            .reduce(f64::max)
    }
}

pub fn integral_report(flow: &BackwardFlow, parts: &PartitionSequence) -> Result<IntegralReport> {
    let k = flow.anchor;
    let gsq: Vec<f64> = flow.gdot.iter().map(|g| g * g).collect();
    Ok(IntegralReport {
        follmer: follmer_integral(&flow.gdot, &flow.beta, parts, k)?,
        rough: rough_integral(&flow.gdot, &flow.gdot_prime, &flow.beta, parts, k)?,
        stieltjes: stieltjes_integral(&flow.gdot, &flow.beta, parts, k)?,
        gdot_sq_dr: time_integral(&gsq, flow.dt, parts, k)?,
        gdot_sq_dbracket: bracket_integral(&gsq, &flow.beta, parts, k)?,
        gdot_prime_dbracket: bracket_integral(&flow.gdot_prime, &flow.beta, parts, k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{sample_driver, DriverKind, FiniteEnergyDriver, TimeGrid};
    use crate::pathint::follmer_qv_values;

    #[test]
    fn constant_integrand_telescopes() {
        let g = TimeGrid::new(1.0, 512).unwrap();
        let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, 11).unwrap();
        let p = PartitionSequence::standard(512, 5).unwrap();
        let c = vec![2.5; 513];
        let m = follmer_integral(&c, u.values(), &p, 300).unwrap();
        for v in m.levels {
            assert!((v - 2.5 * u.value(300)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_form_identity_is_exact_per_level() {
        let n = 1024;
        let g = TimeGrid::new(1.0, n).unwrap();
        let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, 5).unwrap();
        let p = PartitionSequence::standard(n, 6).unwrap();
        let k = 1000;
        let m = follmer_integral(u.values(), u.values(), &p, k).unwrap();
        let qv = follmer_qv_values(u.values(), g.dt(), &p, k).unwrap();
        let x = u.value(k);
        for (l, v) in m.levels.iter().enumerate() {
            let exact = 0.5 * x * x - 0.5 * qv.levels[l][k];
            assert!((v - exact).abs() < 1e-12, "level {l}");
        }
    }

    #[test]
    fn smooth_integrands_match_quadrature() {
        let n = 1 << 14;
        let g = TimeGrid::new(1.0, n).unwrap();
        let h = FiniteEnergyDriver::from_derivative_fn(g, |s| (2.0 * s).cos()).unwrap();
        let v: Vec<f64> = g.times().iter().map(|&t| t * t).collect();
        let p = PartitionSequence::standard(n, 5).unwrap();
        // int_0^1 s^2 h'(s) ds with h' sampled at midpoints; oracle by fine Simpson on the continuous h'
        let oracle = {
            let m = 20000;
            let f = |s: f64| s * s * (2.0 * s).cos();
            let hh = 1.0 / m as f64;
            (0..m).map(|i| {
                let a = i as f64 * hh;
                hh / 6.0 * (f(a) + 4.0 * f(a + hh / 2.0) + f(a + hh))
            }).sum::<f64>()
        };
        let fi = follmer_integral(&v, h.path().values(), &p, n).unwrap();
        let st = stieltjes_integral(&v, h.path().values(), &p, n).unwrap();
        assert!((fi.value - oracle).abs() < 1e-3);
        assert!((st.value - oracle).abs() < 1e-4);
        let zeros = vec![0.0; n + 1];
        let ri = rough_integral(&v, &zeros, h.path().values(), &p, n).unwrap();
        assert!((ri.value - fi.value).abs() < 1e-15);
    }

    #[test]
    fn zero_path_gives_zero_rough_integral() {
        let p = PartitionSequence::standard(64, 3).unwrap();
        let z = vec![0.0; 65];
        let v = vec![1.0; 65];
        let r = rough_integral(&v, &v, &z, &p, 64).unwrap();
        assert!(r.levels.iter().all(|&x| x == 0.0));
        assert!(follmer_integral(&v, &z[..10], &p, 64).is_err());
    }

    #[test]
    fn cauchy_certificate_uses_last_two_differences() {
        let e = LimitEstimate::from_levels(vec![1.0, 1.5, 1.6, 1.61]);
        assert!((e.cauchy_gap.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(LimitEstimate::from_levels(vec![2.0]).cauchy_gap, None);
    }
}
