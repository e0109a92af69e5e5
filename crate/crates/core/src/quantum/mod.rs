//! Statevector simulation over `2n` qubits indexing the `N x N` lattice.
//!
//! The flat amplitude index is `x * N + y`, so the x register occupies the
//! high-order qubits `n..2n` and the y register the low-order qubits `0..n`.

mod measure;
mod noise;
mod qft;
mod state;

pub use measure::{measure_samples, MeasurementHistogram};
pub use noise::{apply_noise, apply_pauli, simulate_noisy, NoiseKind, NoiseModel, NoisyRun, Pauli};
pub use qft::{qft2d, qft_register};
pub use state::{
    apply_map_step, apply_map_steps, fidelity, prepare_state, StateVector, NORM_TOLERANCE,
};
