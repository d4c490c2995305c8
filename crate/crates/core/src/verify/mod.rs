//! Numerical checks of the derivative estimates, pathwise and in expectation.

mod cm;
mod constants;
mod moments;
mod pathwise;

pub use cm::{check_cm_bound, CONE_RAYS};
pub use constants::{constants_for_kappa, EstimateConstants};
pub use moments::{
    brownian_square_moment, check_momentof_f, grid_tail_prob, mc_moment, moment_integrand, FunctionalMomentReport,
    MomentEntry, MomentReport, TailRow, TailTable, YRatio, MIN_EXCEEDANCES, PROXY_CI_FACTOR,
};
pub use pathwise::{
    bracket_kappa_hat, check_key1, check_keyest, key1_log_rhs, young_split, IntegralMode, PathwiseOptions,
};
