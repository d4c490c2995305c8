use serde::Serialize;

use super::functional::Functional;
use super::path::{make_finite_energy, time_reverse_index, FiniteEnergyDriver, ReversedDriver};
use super::sample::{BrownianPath, DriverKind, DriverSample};
use crate::error::{LabError, Result};

/// `beta = N + A` with `A` of finite energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub anchor: usize,
    pub beta: Vec<f64>,
    /// Martingale part `N`, equal to `beta - A` at every grid point.
    pub martingale: Vec<f64>,
    /// Finite-energy part `A` on the grid of `[0, t]`.
    #[serde(skip)]
    pub drift: FiniteEnergyDriver,
    /// `||A||_t^2`.
    pub energy: f64,
    /// Left-point stochastic sum for `N` when it is available, kept as a diagnostic.
    pub martingale_sum: Option<Vec<f64>>,
}

impl Decomposition {
    fn from_drift(beta: &ReversedDriver, drift: FiniteEnergyDriver, martingale_sum: Option<Vec<f64>>) -> Self {
        let b = beta.values();
        let a = drift.path().values();
        let martingale = b.iter().zip(a).map(|(x, y)| x - y).collect();
        Self {
            anchor: beta.anchor(),
            beta: b.to_vec(),
            martingale,
            energy: drift.total_energy(),
            drift,
            martingale_sum,
        }
    }

    /// `N = beta`, `A = 0`.
    pub fn pure_martingale(beta: &ReversedDriver) -> Self {
        let drift = FiniteEnergyDriver::zero(*beta.grid());
        Self::from_drift(beta, drift, None)
    }

    /// `A = beta`, `N = 0`, for finite-energy drivers.
    pub fn pure_drift(beta: &ReversedDriver) -> Result<Self> {
        let drift = FiniteEnergyDriver::from_path(beta.path().clone())?;
        Ok(Self::from_drift(beta, drift, None))
    }

    /// Max over grid points of `|N_j - sum_j|`, the gap between the residual
    /// martingale part and its direct stochastic sum.
    pub fn martingale_sum_gap(&self) -> Option<f64> {
        self.martingale_sum.as_ref().map(|s| {
            s.iter().zip(&self.martingale).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        })
    }
}

/// Decomposes the reversed driver of `U_t = F(t, B_t)` at grid index `anchor`.
///
/// The drift is `Fdot - F''/2 + F' B_{t-r}/(t-r)` evaluated at left points in
/// reversed time; the enlargement term is dropped when `F'` is
/// space-independent, and on the last reversed step (where `t - r -> 0`) the
/// drift is set to zero.
pub fn decompose_functional(f: &dyn Functional, b: &BrownianPath, anchor: usize) -> Result<Decomposition> {
    let grid = b.grid;
    grid.check_index(anchor)?;
    if anchor == 0 {
        return Err(LabError::InvalidGrid("anchor must be > 0".into()));
    }
    let u: Vec<f64> = b.values.iter().enumerate().map(|(i, x)| f.value(grid.time(i), *x)).collect();
    let path = super::path::DriverPath::new(grid, u)?;
    let beta = time_reverse_index(&path, anchor)?;
    let dt = grid.dt();
    let enlarged = !f.dx_space_independent();
    let mut drift = Vec::with_capacity(anchor);
    let mut sum = Vec::with_capacity(anchor + 1);
    let mut acc = 0.0;
    sum.push(acc);
    for j in 0..anchor {
        let idx = anchor - j;
        let tau = grid.time(idx);
        let x = b.values[idx];
        let dw = b.values[idx] - b.values[idx - 1];
        let last = j + 1 == anchor;
        let mut d = f.dt(tau, x) - 0.5 * f.dxx(tau, x);
        let mut dw_tilde = dw;
        if enlarged {
            if last {
                d = 0.0;
            } else {
                d += f.dx(tau, x) * x / tau;
                dw_tilde -= x / tau * dt;
            }
        }
        drift.push(d);
        acc += f.dx(tau, x) * dw_tilde;
        sum.push(acc);
    }
    let drift = make_finite_energy(drift, *beta.grid())?;
    Ok(Decomposition::from_drift(&beta, drift, Some(sum)))
}

/// Canonical decomposition of the reversed driver of a sample.
pub fn decompose(kind: &DriverKind, sample: &DriverSample, anchor: usize) -> Result<Decomposition> {
    let beta = time_reverse_index(&sample.path, anchor)?;
    match kind {
        DriverKind::Zero | DriverKind::FiniteEnergy { .. } => Decomposition::pure_drift(&beta),
        DriverKind::Brownian { .. } | DriverKind::VariableKappa { .. } => Ok(Decomposition::pure_martingale(&beta)),
        DriverKind::HPerturbed { inner, .. } => {
            let h = sample
                .perturbation
                .as_ref()
                .ok_or_else(|| LabError::InvalidSpec("sample carries no perturbation".into()))?;
            let inner_dec = match inner.as_ref() {
                DriverKind::Brownian { .. } | DriverKind::VariableKappa { .. } | DriverKind::Zero => None,
                _ => {
                    let mut s = sample.clone();
                    s.path = sample.path.add(&h.path().reflected())?;
                    Some(decompose(inner, &s, anchor)?)
                }
            };
            let mut drift = h.reversed(anchor)?;
            if let Some(d) = inner_dec {
                drift = drift.add(&d.drift)?;
            }
            Ok(Decomposition::from_drift(&beta, drift, None))
        }
        DriverKind::Ou { lambda } => {
            let z = sample.ou.as_ref().ok_or_else(|| LabError::InvalidSpec("sample carries no OU path".into()))?;
            // Reversed OU is OU again: d beta = lambda Z_{t-s} ds - sqrt(lambda) dB~.
            let drift = (0..anchor).map(|j| lambda * z[anchor - j]).collect();
            let drift = make_finite_energy(drift, *beta.grid())?;
            Ok(Decomposition::from_drift(&beta, drift, None))
        }
        DriverKind::Functional(f) => {
            let b = sample.brownian.as_ref().ok_or_else(|| LabError::InvalidSpec("sample carries no Brownian path".into()))?;
            decompose_functional(f, b, anchor)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::functional::BuiltinFunctional;
    use crate::drivers::grid::TimeGrid;
    use crate::drivers::sample::{sample_brownian, sample_driver_detailed, KappaProfile, SlopeSpec};

    fn bm(n: usize, seed: u64) -> BrownianPath {
        sample_brownian(TimeGrid::new(1.0, n).unwrap(), &KappaProfile::Constant(1.0), seed).unwrap()
    }

    #[test]
    fn linear_functional_has_no_drift() {
        let b = bm(256, 1);
        let kappa: f64 = 1.7;
        let d = decompose_functional(&BuiltinFunctional::Linear { kappa }, &b, 200).unwrap();
        assert!(d.drift.path().values().iter().all(|v| *v == 0.0));
        assert_eq!(d.energy, 0.0);
        for j in 0..=200 {
            let expect = kappa.sqrt() * (b.values[200] - b.values[200 - j]);
            assert!((d.martingale[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_is_exact() {
        let b = bm(512, 2);
        for f in [BuiltinFunctional::TPowP { p: 1.0 }, BuiltinFunctional::TLog1pX2] {
            let d = decompose_functional(&f, &b, 400).unwrap();
            assert_eq!(d.martingale[0], 0.0);
            assert_eq!(d.drift.path().value(0), 0.0);
            for j in 0..=400 {
                assert!((d.martingale[j] + d.drift.path().value(j) - d.beta[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn t_times_b_drift_matches_trapezoid_quadrature() {
        // F = t x: A_s = int_0^s B_{t-r} dr.
        let n = 1 << 16;
        let b = bm(n, 3);
        let k = n;
        let d = decompose_functional(&BuiltinFunctional::TPowP { p: 1.0 }, &b, k).unwrap();
        let dt = 1.0 / n as f64;
        let mut trap = vec![0.0; k + 1];
        for j in 0..k {
            trap[j + 1] = trap[j] + 0.5 * dt * (b.values[k - j] + b.values[k - j - 1]);
        }
        let scale = trap.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = (0..=k).fold(0.0_f64, |m, j| m.max((d.drift.path().value(j) - trap[j]).abs()));
        assert!(err / scale < 1e-3, "rel err {}", err / scale);
    }

    #[test]
    fn martingale_sum_tracks_residual() {
        let b = bm(1 << 14, 4);
        let d = decompose_functional(&BuiltinFunctional::TLog1pX2, &b, 1 << 14).unwrap();
        assert!(d.martingale_sum_gap().unwrap() < 0.1);
    }

    #[test]
    fn perturbed_driver_splits_into_brownian_and_h() {
        let g = TimeGrid::new(1.0, 128).unwrap();
        let kind = DriverKind::HPerturbed {
            inner: Box::new(DriverKind::Brownian { kappa: 1.0 }),
            h: SlopeSpec { slopes: vec![1.0] },
        };
        let s = sample_driver_detailed(&kind, g, 5).unwrap();
        let d = decompose(&kind, &s, 100).unwrap();
        let b = s.brownian.as_ref().unwrap();
        for j in 0..=100 {
            assert!((d.martingale[j] - (b.values[100] - b.values[100 - j])).abs() < 1e-12);
            assert!((d.drift.path().value(j) - j as f64 / 128.0).abs() < 1e-12);
        }
        assert!((d.energy - 100.0 / 128.0).abs() < 1e-12);
    }

    #[test]
    fn ou_decomposition_reconstructs_beta() {
        let g = TimeGrid::new(1.0, 256).unwrap();
        let kind = DriverKind::Ou { lambda: 1.0 };
        let s = sample_driver_detailed(&kind, g, 6).unwrap();
        let d = decompose(&kind, &s, 256).unwrap();
        for j in 0..=256 {
            assert!((d.martingale[j] + d.drift.path().value(j) - d.beta[j]).abs() < 1e-13);
        }
        assert!(d.energy > 0.0);
    }
}
