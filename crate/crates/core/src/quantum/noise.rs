//! Per-qubit Pauli channels sampled as pure-state Monte Carlo trajectories.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{apply_map_step, fidelity, StateVector};
use crate::error::{Error, Result};
use crate::maps::{CatMatrix, Direction};
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Bitflip,
    Phaseflip,
    Depolarizing,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bitflip" => Ok(NoiseKind::Bitflip),
            "phaseflip" => Ok(NoiseKind::Phaseflip),
            "depolarizing" => Ok(NoiseKind::Depolarizing),
            other => Err(Error::Parse(format!(
                "noise kind must be bitflip, phaseflip or depolarizing, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Bitflip => "bitflip",
            NoiseKind::Phaseflip => "phaseflip",
            NoiseKind::Depolarizing => "depolarizing",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Per-qubit error probability per channel application.
    pub epsilon: f64,
    pub trajectories: usize,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, epsilon: f64, trajectories: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "noise epsilon must be in [0, 1], got {epsilon}"
            )));
        }
        if trajectories == 0 {
            return Err(Error::InvalidParameter("trajectories must be >= 1".into()));
        }
        Ok(NoiseModel {
            kind,
            epsilon,
            trajectories,
        })
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            kind: NoiseKind::Bitflip,
            epsilon: 0.0,
            trajectories: 1,
        }
    }

    /// Parses `kind:epsilon`, e.g. `bitflip:0.01`.
    pub fn parse(spec: &str, trajectories: usize) -> Result<Self> {
        let (kind, eps) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("noise {spec:?}: expected kind:epsilon")))?;
        let eps: f64 = eps
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("noise {spec:?}: {e}")))?;
        NoiseModel::new(kind.trim().parse()?, eps, trajectories)
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.epsilon)
    }
}

/// Applies a single-qubit Pauli to `qubit` (0 = lowest bit of the flat index).
pub fn apply_pauli(psi: &mut StateVector, qubit: u32, pauli: Pauli) {
    assert!(qubit < psi.num_qubits(), "qubit {qubit} out of range");
    let bit = 1usize << qubit;
    let amps = psi.amplitudes_mut();
    let i = Complex64::new(0.0, 1.0);
    for base in 0..amps.len() {
        if base & bit != 0 {
            continue;
        }
        let (lo, hi) = (base, base | bit);
        match pauli {
            Pauli::X => amps.swap(lo, hi),
            Pauli::Z => amps[hi] = -amps[hi],
            Pauli::Y => {
                let (a0, a1) = (amps[lo], amps[hi]);
                amps[lo] = -i * a1;
                amps[hi] = i * a0;
            }
        }
    }
}

/// One Monte Carlo realization of the channel: each qubit independently
/// suffers the channel's Pauli with probability `epsilon`. Returns the
/// number of Paulis applied.
pub fn apply_noise(psi: &mut StateVector, model: &NoiseModel, rng: &mut impl Rng) -> usize {
    if model.epsilon == 0.0 {
        return 0;
    }
    let mut errors = 0;
    for qubit in 0..psi.num_qubits() {
        if rng.gen::<f64>() >= model.epsilon {
            continue;
        }
        let pauli = match model.kind {
            NoiseKind::Bitflip => Pauli::X,
            NoiseKind::Phaseflip => Pauli::Z,
            NoiseKind::Depolarizing => [Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)],
        };
        apply_pauli(psi, qubit, pauli);
        errors += 1;
    }
    errors
}

/// Trajectory-averaged statistics of a noisy evolution; entry `t` refers to
/// the state after `t` map steps.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyRun {
    pub mean_fidelity: Vec<f64>,
    /// Standard error of the mean fidelity.
    pub fidelity_stderr: Vec<f64>,
    /// Fraction of trajectories with no Pauli applied so far.
    pub error_free_fraction: Vec<f64>,
}

/// Evolves `psi0` for `steps` map steps, applying the noise channel
/// `gates_per_step` times after every step, and compares each trajectory
/// against the ideal evolution. Trajectory `j` at step `s` draws from the
/// stream keyed by `(seed, j, s)`.
pub fn simulate_noisy(
    psi0: &StateVector,
    m: &CatMatrix,
    steps: usize,
    model: &NoiseModel,
    gates_per_step: usize,
    seed: u64,
) -> Result<NoisyRun> {
    NoiseModel::new(model.kind, model.epsilon, model.trajectories)?;
    // (fidelity, error-free) per step, per trajectory.
    let runs: Vec<Vec<(f64, bool)>> = (0..model.trajectories as u64)
        .into_par_iter()
        .map(|traj| {
            let mut ideal = psi0.clone();
            let mut noisy = psi0.clone();
            let mut clean = true;
            let mut out = Vec::with_capacity(steps + 1);
            out.push((1.0, true));
            for step in 1..=steps {
                ideal = apply_map_step(&ideal, m, Direction::Forward);
                noisy = apply_map_step(&noisy, m, Direction::Forward);
                let mut rng = stream(seed, Purpose::Noise, &[traj, step as u64]);
                for _ in 0..gates_per_step {
                    if apply_noise(&mut noisy, model, &mut rng) > 0 {
                        clean = false;
                    }
                }
                let f = if clean {
                    1.0
                } else {
                    fidelity(&ideal, &noisy)?
                };
                out.push((f, clean));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let count = runs.len() as f64;
    let mut run = NoisyRun {
        mean_fidelity: Vec::with_capacity(steps + 1),
        fidelity_stderr: Vec::with_capacity(steps + 1),
        error_free_fraction: Vec::with_capacity(steps + 1),
    };
    for t in 0..=steps {
        let mean = runs.iter().map(|r| r[t].0).sum::<f64>() / count;
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r[t].0 - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        run.mean_fidelity.push(mean);
        run.fidelity_stderr.push((var / count).sqrt());
        run.error_free_fraction
            .push(runs.iter().filter(|r| r[t].1).count() as f64 / count);
    }
    Ok(run)
}
