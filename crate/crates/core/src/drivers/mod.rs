//! Driver construction: finite-energy paths, sampled stochastic drivers,
//! time reversal and semimartingale decompositions of reversed drivers.

mod decompose;
mod functional;
mod grid;
mod io;
mod path;
mod sample;

pub use decompose::{decompose, decompose_functional, Decomposition};
pub use functional::{BuiltinFunctional, Functional};
pub use grid::TimeGrid;
pub use io::{read_driver_csv, write_driver_csv, DriverSpecFile};
pub use path::{
    cm_norm_sq, make_finite_energy, time_reverse, time_reverse_index, DriverPath, FiniteEnergyDriver,
    Interpolation, ReversedDriver,
};
pub use sample::{
    path_seed, sample_brownian, sample_driver, sample_driver_detailed, sample_ou, BrownianPath, DriverKind,
    DriverSample, KappaProfile, KappaStep, SlopeSpec, RNG_ALGORITHM,
};
