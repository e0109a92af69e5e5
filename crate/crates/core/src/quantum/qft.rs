//! Quantum Fourier transform built from Hadamard, controlled-phase and swap
//! gates on each axis register.
//!
//! Convention: forward kernel `exp(+2 pi i k v / N) / sqrt(N)` per axis,
//! inverse uses the conjugate kernel.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use super::state::StateVector;
use crate::maps::Direction;

fn hadamard(amps: &mut [Complex64], qubit: u32) {
    let bit = 1usize << qubit;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a, b) = (amps[i], amps[i | bit]);
            amps[i] = (a + b) * FRAC_1_SQRT_2;
            amps[i | bit] = (a - b) * FRAC_1_SQRT_2;
        }
    }
}

fn controlled_phase(amps: &mut [Complex64], control: u32, target: u32, angle: f64) {
    let mask = (1usize << control) | (1usize << target);
    let phase = Complex64::from_polar(1.0, angle);
    for (i, a) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *a *= phase;
        }
    }
}

fn swap_qubits(amps: &mut [Complex64], a: u32, b: u32) {
    let (ba, bb) = (1usize << a, 1usize << b);
    for i in 0..amps.len() {
        if i & ba != 0 && i & bb == 0 {
            amps.swap(i, i ^ ba ^ bb);
        }
    }
}

/// QFT on the `width` qubits starting at `offset` of a flat amplitude
/// array, treating them as an unsigned integer with the lowest bit at
/// `offset`.
pub fn qft_register(amps: &mut [Complex64], offset: u32, width: u32, direction: Direction) {
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    for j in (0..width).rev() {
        hadamard(amps, offset + j);
        for k in (0..j).rev() {
            let angle = sign * PI / (1u64 << (j - k)) as f64;
            controlled_phase(amps, offset + k, offset + j, angle);
        }
    }
    for j in 0..width / 2 {
        swap_qubits(amps, offset + j, offset + width - 1 - j);
    }
}

/// Applies the QFT independently to the x register (high qubits) and the
/// y register (low qubits). `Direction::Backward` is the inverse transform.
pub fn qft2d(psi: &StateVector, direction: Direction) -> StateVector {
    let n = psi.qubits_per_axis();
    let mut out = psi.clone();
    let amps = out.amplitudes_mut();
    qft_register(amps, 0, n, direction);
    qft_register(amps, n, n, direction);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::Density;
    use crate::maps::LatticeSize;
    use crate::quantum::prepare_state;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    /// Direct O(N^4) evaluation of the 2D DFT with the positive kernel.
    fn naive_dft2d(amps: &[Complex64], n: usize, sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for kx in 0..n {
            for ky in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..n {
                    for y in 0..n {
                        let phase = sign * 2.0 * PI * ((kx * x + ky * y) % n) as f64 / n as f64;
                        acc += amps[x * n + y] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[kx * n + ky] = acc / n as f64;
            }
        }
        out
    }

    fn random_state(size: LatticeSize, seed: u64) -> StateVector {
        let mut rng = stream(seed, Purpose::RandomDensity, &[]);
        let mut amps: Vec<Complex64> = (0..size.cells().unwrap())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(size, amps).unwrap()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [2u64, 4, 8, 16] {
            let size = LatticeSize::new(n).unwrap();
            let psi = random_state(size, n);
            for (dir, sign) in [(Direction::Forward, 1.0), (Direction::Backward, -1.0)] {
                let got = qft2d(&psi, dir);
                let want = naive_dft2d(psi.amplitudes(), n as usize, sign);
                for (g, w) in got.amplitudes().iter().zip(&want) {
                    assert!((g - w).norm() < 1e-12, "N={n} {dir}: {g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn uniform_goes_to_zero_mode() {
        let size = LatticeSize::new(16).unwrap();
        let psi = prepare_state(&Density::uniform(size).unwrap()).unwrap();
        let out = qft2d(&psi, Direction::Forward);
        assert!((out.amplitudes()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(out.amplitudes()[1..].iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn delta_goes_to_plane_wave() {
        let size = LatticeSize::new(8).unwrap();
        let (x0, y0) = (3usize, 5usize);
        let out = qft2d(
            &StateVector::basis(size, x0 as u64, y0 as u64).unwrap(),
            Direction::Forward,
        );
        for kx in 0..8 {
            for ky in 0..8 {
                let phase = 2.0 * PI * (kx * x0 + ky * y0) as f64 / 8.0;
                let want = Complex64::from_polar(1.0 / 8.0, phase);
                assert!((out.amplitudes()[kx * 8 + ky] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let size = LatticeSize::new(32).unwrap();
        let psi = random_state(size, 77);
        let back = qft2d(&qft2d(&psi, Direction::Forward), Direction::Backward);
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((back.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
