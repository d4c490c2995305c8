// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drivers;
pub mod error;
pub mod flow;
pub mod ode;
pub mod pathint;
pub mod report;
pub mod stats;
pub mod trace;
pub mod verify;

pub use error::{LabError, Result};
