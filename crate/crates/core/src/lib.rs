//! Exact and finite-precision simulation of hyperbolic torus maps.
//!
//! The crate is organised around the discretized cat map on an `N x N`
//! lattice (`N` a power of two):
//!
//! * [`maps`] holds the map itself, its inverse, powers, periods and the
//!   Lyapunov exponent.
//! * [`classical`] transports whole densities exactly, measures how an
//!   initial `b`-bit quantization diverges from an exact rational
//!   reference, and iterates point sets backwards.
//! * [`quantum`] is a statevector simulator over `2n` qubits indexing the
//!   lattice cells, with Pauli noise trajectories, a 2D QFT and sampling.
//! * [`spectral`] computes the classical power spectrum that the QFT
//!   measurement estimates.
//! * [`experiments`] bundles named, seeded end-to-end scenarios.

pub mod classical;
pub mod error;
pub mod experiments;
pub mod io;
pub mod maps;
pub mod quantum;
pub mod rng;
pub mod spectral;

pub use classical::{
    backward_fine_structure, breakdown_time, divergence_series, evolve_density, fit_lyapunov,
    fit_lyapunov_ensemble, Density, DivergenceSeries, FineStructure, FitWindow, FixedPointState,
};
pub use error::{Error, Result};
pub use maps::{
    continuous_step, discrete_inverse_step, discrete_step, lyapunov_exponent, map_period,
    matrix_pow_mod, CatMatrix, Direction, LatticePoint, LatticeSize, ModMatrix, RationalPoint,
    TorusPoint,
};
pub use quantum::{
    apply_map_step, apply_noise, fidelity, measure_samples, prepare_state, qft2d,
    MeasurementHistogram, NoiseKind, NoiseModel, Pauli, StateVector,
};
pub use spectral::{estimate_spectrum, power_spectrum, tv_distance, Spectrum};
