use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::{Density, NORMALIZATION_TOLERANCE};
use crate::error::{Error, Result};
use crate::maps::{CatMatrix, Direction, LatticeSize};

pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    size: LatticeSize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(size: LatticeSize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = size.cells()?;
        if amplitudes.len() != expected {
            return Err(Error::InvalidState(format!(
                "expected {expected} amplitudes for N={size}, got {}",
                amplitudes.len()
            )));
        }
        let state = StateVector { size, amplitudes };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(state)
    }

    /// Computational basis state `|x, y>`.
    pub fn basis(size: LatticeSize, x: u64, y: u64) -> Result<Self> {
        let p = crate::maps::LatticePoint::new(x, y, size)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); size.cells()?];
        amplitudes[p.index()] = Complex64::new(1.0, 0.0);
        Ok(StateVector { size, amplitudes })
    }

    pub fn size(&self) -> LatticeSize {
        self.size
    }

    /// Qubits per axis, `n` with `N = 2^n`.
    pub fn qubits_per_axis(&self) -> u32 {
        self.size.bits()
    }

    pub fn num_qubits(&self) -> u32 {
        2 * self.size.bits()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// CSV dump `index,real,imag` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,real,imag\n");
        for (i, a) in self.amplitudes.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", a.re, a.im));
        }
        out
    }
}

/// Real, nonnegative amplitudes `sqrt(p(x, y))`.
pub fn prepare_state(dens: &Density) -> Result<StateVector> {
    let total = dens.total();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidDensity(format!(
            "total mass {total} is not 1"
        )));
    }
    let scale = total.sqrt();
    let amplitudes = dens
        .cells()
        .iter()
        .map(|p| Complex64::new(p.sqrt() / scale, 0.0))
        .collect();
    StateVector::from_amplitudes(dens.size(), amplitudes)
}

/// One application of the map unitary: `psi'[T(x, y)] = psi[(x, y)]`.
pub fn apply_map_step(psi: &StateVector, m: &CatMatrix, direction: Direction) -> StateVector {
    apply_map_steps(psi, m, 1, direction)
}

/// `t` applications of the map unitary, as a single permutation.
pub fn apply_map_steps(
    psi: &StateVector,
    m: &CatMatrix,
    t: u64,
    direction: Direction,
) -> StateVector {
    let n = psi.size.get();
    let pull = m.oriented(direction).inverse().reduce(n).pow(t);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); psi.amplitudes.len()];
    amplitudes
        .par_chunks_mut(n as usize)
        .enumerate()
        .for_each(|(x, row)| {
            for (y, out) in row.iter_mut().enumerate() {
                let (sx, sy) = pull.apply(x as u64, y as u64);
                *out = psi.amplitudes[(sx * n + sy) as usize];
            }
        });
    StateVector {
        size: psi.size,
        amplitudes,
    }
}

/// `|<psi|phi>|^2`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    if psi.amplitudes.len() != phi.amplitudes.len() {
        return Err(Error::ShapeMismatch {
            left: psi.amplitudes.len(),
            right: phi.amplitudes.len(),
        });
    }
    let overlap: Complex64 = psi
        .amplitudes
        .iter()
        .zip(&phi.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(overlap.norm_sqr().min(1.0))
}
