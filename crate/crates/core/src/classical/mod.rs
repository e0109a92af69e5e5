//! Classical engines: exact density transport, fixed-precision divergence
//! against an exact rational reference, and backward point-set evolution.

mod density;
mod divergence;
mod fine;

pub use density::{evolve_density, Density, FILE_NORMALIZATION_TOLERANCE, NORMALIZATION_TOLERANCE};
pub use divergence::{
    breakdown_time, breakdown_time_sampled, divergence_series, fit_lyapunov, fit_lyapunov_ensemble,
    random_rational_point, random_rational_point_in_cell, reference_denominator,
    torus_distance_exact, BreakdownStats, DivergenceSeries, FitWindow, FixedPointState,
    LyapunovEnsemble,
};
pub use fine::{backward_fine_structure, block, FineStep, FineStructure};
