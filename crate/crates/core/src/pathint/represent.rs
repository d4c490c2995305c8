use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integral::{integral_report, IntegralReport};
use super::partition::PartitionSequence;
use crate::drivers::DriverPath;
use crate::error::{LabError, Result};
use crate::flow::{backward_flow_from_values, BackwardFlow, FlowConfig};
use crate::report::{EstimateEntry, EstimateReport, ReportKind};

/// Which stochastic integral carries the martingale part of the representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationForm {
    /// Föllmer–Itô sum plus the bracket correction `1/2 int Gdot' d[beta]`.
    #[default]
    Follmer,
    /// Compensated rough sum, no separate bracket term.
    Rough,
    /// Trapezoid Riemann–Stieltjes sum, for finite-energy drivers.
    RiemannStieltjes,
}

/// Reversed driver at grid index `k`.
pub fn reversed_values(u: &DriverPath, k: usize) -> Vec<f64> {
    let uk = u.value(k);
    (0..=k).map(|j| uk - u.value(k - j)).collect()
}

/// `log(Y_t / y) - log((X_t^2 + Y_t^2) / (x^2 + y^2))`.
pub fn boundary_terms(flow: &BackwardFlow) -> f64 {
    let (xt, yt) = (flow.x_end(), flow.y_end());
    (yt / flow.y).ln() - ((xt * xt + yt * yt) / (flow.x * flow.x + flow.y * flow.y)).ln()
}

/// Right-hand side of the representation per partition level.
pub fn representation_rhs_levels(flow: &BackwardFlow, ints: &IntegralReport, form: RepresentationForm) -> Vec<f64> {
    let bt = boundary_terms(flow);
    let n = ints.follmer.levels.len();
    (0..n)
        .map(|l| {
            let m = match form {
                RepresentationForm::Follmer => ints.follmer.levels[l] + 0.5 * ints.gdot_prime_dbracket.levels[l],
                RepresentationForm::Rough => ints.rough.levels[l],
                RepresentationForm::RiemannStieltjes => ints.stieltjes.levels[l],
            };
            m - ints.gdot_sq_dr.levels[l] + bt
        })
        .collect()
}

/// Compares `log |f_t'(z + U_t)|` from the flow with the pathwise
/// representation assembled from partition sums. `parts` must partition
/// `{0, ..., k}` where `k` is the grid index of `t`; `None` uses
/// [`PartitionSequence::standard`] with six levels.
pub fn check_representation(
    u: &DriverPath,
    z: Complex64,
    t: f64,
    parts: Option<&PartitionSequence>,
    cfg: &FlowConfig,
    form: RepresentationForm,
    tol: f64,
) -> Result<EstimateReport> {
    if !(z.im > 0.0) {
        return Err(LabError::InvalidPoint(format!("need Im z > 0, got {z}")));
    }
    let k = u.grid().index_of(t)?;
    let owned;
    let parts = match parts {
        Some(p) => p,
        None => {
            owned = PartitionSequence::standard(k.max(1), 6)?;
            &owned
        }
    };
    if parts.steps() != k {
        return Err(LabError::InvalidPartition(format!("partition covers {} steps, anchor is {k}", parts.steps())));
    }
    let mut report = EstimateReport::new(format!("representation/{form:?}").to_lowercase(), ReportKind::Identity, tol);
    if k == 0 {
        report.push(EstimateEntry::new(t, z.re, z.im, 0.0, 0.0));
        return Ok(report);
    }
    let beta = reversed_values(u, k);
    let flow = backward_flow_from_values(&beta, u.grid().dt(), z.re, z.im, cfg)?;
    let ints = integral_report(&flow, parts)?;
    let rhs = representation_rhs_levels(&flow, &ints, form);
    let lhs = flow.logfp();
    report.level_gaps = rhs.iter().map(|r| (r - lhs).abs()).collect();
    let cauchy = match form {
        RepresentationForm::Follmer => ints.follmer.cauchy_gap,
        RepresentationForm::Rough => ints.rough.cauchy_gap,
        RepresentationForm::RiemannStieltjes => ints.stieltjes.cauchy_gap,
    };
    report.push(EstimateEntry::new(t, z.re, z.im, lhs, *rhs.last().unwrap()).with_cauchy(cauchy));
    report.term("follmer", ints.follmer.value);
    report.term("rough", ints.rough.value);
    report.term("stieltjes", ints.stieltjes.value);
    report.term("gdot_sq_dr", ints.gdot_sq_dr.value);
    report.term("gdot_prime_dbracket", ints.gdot_prime_dbracket.value);
    report.term("gdot_sq_dbracket", ints.gdot_sq_dbracket.value);
    report.term("boundary", boundary_terms(&flow));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{sample_driver, DriverKind, FiniteEnergyDriver, TimeGrid};

    #[test]
    fn zero_driver_identity_is_closed_form() {
        let u = DriverPath::zero(TimeGrid::new(1.0, 1024).unwrap());
        for form in [RepresentationForm::Follmer, RepresentationForm::Rough, RepresentationForm::RiemannStieltjes] {
            let r = check_representation(&u, Complex64::new(0.0, 0.2), 1.0, None, &FlowConfig::default(), form, 1e-8).unwrap();
            let exact = 0.5 * (0.04f64 / 4.04).ln();
            assert!((r.entries[0].log_lhs - exact).abs() < 1e-8);
            assert!(r.pass, "{:?}", r.max_gap);
        }
    }

    #[test]
    fn finite_energy_gap_shrinks_with_grid() {
        let mut gaps = Vec::new();
        for log2 in [10u32, 11, 12] {
            let g = TimeGrid::dyadic(1.0, log2).unwrap();
            let h = FiniteEnergyDriver::from_derivative_fn(g, |s| 2.0 * (3.0 * s).sin() + 1.0).unwrap();
            let r = check_representation(
                h.path(),
                Complex64::new(0.1, 0.3),
                1.0,
                None,
                &FlowConfig::default(),
                RepresentationForm::RiemannStieltjes,
                1e-4,
            )
            .unwrap();
            gaps.push(r.max_gap);
        }
        assert!(gaps[0] / gaps[1] >= 2.0 && gaps[1] / gaps[2] >= 2.0, "{gaps:?}");
        assert!(gaps[2] < 1e-4);
    }

    #[test]
    fn brownian_follmer_and_rough_forms_agree() {
        let n = 1 << 16;
        let g = TimeGrid::new(1.0, n).unwrap();
        let z = Complex64::new(0.0, 0.1);
        let cfg = FlowConfig::default();
        for seed in [21, 22] {
            let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, seed).unwrap();
            let f = check_representation(&u, z, 1.0, None, &cfg, RepresentationForm::Follmer, 1e-2).unwrap();
            let r = check_representation(&u, z, 1.0, None, &cfg, RepresentationForm::Rough, 1e-2).unwrap();
            assert!(f.pass, "{}", f.max_gap);
            assert!((f.entries[0].log_rhs - r.entries[0].log_rhs).abs() < 1e-9);
            // coarsest level is far off, finest is within tolerance
            assert!(f.level_gaps[0] > *f.level_gaps.last().unwrap());
        }
    }

    #[test]
    fn partition_must_match_anchor() {
        let u = DriverPath::zero(TimeGrid::new(1.0, 64).unwrap());
        let p = PartitionSequence::standard(64, 3).unwrap();
        let e = check_representation(&u, Complex64::new(0.0, 1.0), 0.5, Some(&p), &FlowConfig::default(), RepresentationForm::Follmer, 1e-6);
        assert!(e.is_err());
    }
}
