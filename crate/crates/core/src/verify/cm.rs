use num_complex::Complex64;
use rayon::prelude::*;

use crate::drivers::FiniteEnergyDriver;
use crate::error::Result;
use crate::flow::{eval_f_with_derivative_index, FlowConfig};
use crate::report::{EstimateEntry, EstimateReport, ReportKind};

/// Default cone rays `x = r y` for the finer bound.
pub const CONE_RAYS: [f64; 3] = [-2.0, 0.5, 2.0];

/// `|f_t'(iy + U_t)| <= exp(||U||_t^2 / 4)` on the `(t, y)` matrix, and the finer
/// bound `|f_t'(z + U_t)| <= (y / Y_t)(1 + x^2/y^2) exp(||U||_t^2 / 4)` at
/// `z = x + iy` with `x = r y` for each ray `r`. Returns `(plain, finer)`.
pub fn check_cm_bound(
    h: &FiniteEnergyDriver,
    ts: &[f64],
    ys: &[f64],
    rays: &[f64],
    flow: &FlowConfig,
    slack: f64,
) -> Result<(EstimateReport, EstimateReport)> {
    let grid = h.grid();
    let mut jobs = Vec::new();
    for &t in ts {
        let k = grid.index_of(t)?;
        for &y in ys {
            jobs.push((k, t, 0.0, y));
            for &r in rays {
                if r != 0.0 {
                    jobs.push((k, t, r * y, y));
                }
            }
        }
    }
    let results: Vec<(usize, f64, f64, f64, Complex64, Complex64)> = jobs
        .par_iter()
        .map(|&(k, t, x, y)| {
            let (f, d) = eval_f_with_derivative_index(h.path(), Complex64::new(x, y), k, flow)?;
            Ok((k, t, x, y, f, d))
        })
        .collect::<Result<_>>()?;
    let mut plain = EstimateReport::new("cm_bound", ReportKind::Inequality, slack);
    let mut finer = EstimateReport::new("cm_finer_bound", ReportKind::Inequality, slack);
    for (k, t, x, y, f, d) in results {
        let quarter = 0.25 * h.energy_at(k);
        let lhs = d.norm().ln();
        if x == 0.0 {
            plain.push(EstimateEntry::new(t, x, y, lhs, quarter));
        } else {
            let rhs = (y / f.im).ln() + (1.0 + x * x / (y * y)).ln() + quarter;
            finer.push(EstimateEntry::new(t, x, y, lhs, rhs));
        }
    }
    plain.term("energy", h.total_energy());
    finer.term("energy", h.total_energy());
    Ok((plain, finer))
}
