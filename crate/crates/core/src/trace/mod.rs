//! Trace extraction `gamma_t = lim f_t(iy + U_t)` along a geometric `y`
//! schedule with Cauchy stopping, and regularity measurements of the result.

mod experiments;
mod extract;
mod regularity;

pub use experiments::{
    cone_check, continuity_experiment, grid_energy, koebe_check, v_integral, ConeEntry, ConeReport, ContinuityConfig,
    ContinuityRow, ContinuityTable,
};
pub use extract::{extract_trace, extract_trace_at, Trace, TraceConfig, TracePoint};
pub use regularity::{
    holder_half_norm, holder_norm, min_gap, pvar, pvar_norm, simple_curve_check, sqrt_lip, sqrt_reparam_lip,
    RegularityReport, SimpleCurveReport,
};
