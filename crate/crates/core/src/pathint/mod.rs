//! Pathwise integration along nested partitions: Föllmer brackets, left-point
//! (Föllmer–Itô) and compensated (rough) sums, and the representation of
//! `log |f_t'|` through the reversed flow.

mod integral;
mod partition;
mod qv;
mod represent;

pub use integral::{
    bracket_integral, follmer_integral, integral_report, rough_integral, stieltjes_integral, time_integral,
    IntegralReport, LimitEstimate,
};
pub use partition::PartitionSequence;
pub use qv::{bracket_lipschitz_sup, bracket_lipschitz_sup_window, follmer_qv, follmer_qv_values, QVPath};
pub use represent::{
    boundary_terms, check_representation, representation_rhs_levels, reversed_values, RepresentationForm,
};
