//! Classical power spectra, the counterpart to sampling a QFT'd state.
//!
//! The quantum pipeline Fourier-transforms *amplitudes*, i.e. the square
//! root of the density, so [`power_spectrum`] takes an amplitude grid too.
//! The kernel and normalization match [`crate::quantum::qft2d`].

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::classical::Density;
use crate::error::{Error, Result};
use crate::maps::LatticeSize;
use crate::quantum::MeasurementHistogram;

/// Normalized power over wave vectors `(k_x, k_y)`, flat index `k_x * N + k_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    size: LatticeSize,
    power: Vec<f64>,
}

impl Spectrum {
    pub fn size(&self) -> LatticeSize {
        self.size
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn get(&self, kx: u64, ky: u64) -> f64 {
        self.power[(kx * self.size.get() + ky) as usize]
    }
}

/// A normalized distribution over an `N x N` grid.
pub trait GridDistribution {
    fn grid_size(&self) -> LatticeSize;
    fn values(&self) -> &[f64];
}

impl GridDistribution for Spectrum {
    fn grid_size(&self) -> LatticeSize {
        self.size
    }

    fn values(&self) -> &[f64] {
        &self.power
    }
}

impl GridDistribution for Density {
    fn grid_size(&self) -> LatticeSize {
        self.size()
    }

    fn values(&self) -> &[f64] {
        self.cells()
    }
}

/// Unitary 2D DFT, `exp(+2 pi i (k_x x + k_y y) / N) / N`, via FFTs along
/// rows and then columns.
pub fn dft2d(grid: &[Complex64], size: LatticeSize) -> Result<Vec<Complex64>> {
    let len = size.cells()?;
    if grid.len() != len {
        return Err(Error::ShapeMismatch {
            left: grid.len(),
            right: len,
        });
    }
    let n = size.get() as usize;
    let fft = FftPlanner::new().plan_fft(n, FftDirection::Inverse);
    let mut data = grid.to_vec();
    fft.process(&mut data);
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for y in 0..n {
        for x in 0..n {
            column[x] = data[x * n + y];
        }
        fft.process(&mut column);
        for x in 0..n {
            data[x * n + y] = column[x];
        }
    }
    let scale = 1.0 / n as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(data)
}

/// `|DFT(grid)|^2`, renormalized to unit total power.
pub fn power_spectrum(grid: &[Complex64], size: LatticeSize) -> Result<Spectrum> {
    if grid.iter().all(|a| a.norm_sqr() == 0.0) {
        return Err(Error::InvalidParameter(
            "power spectrum of an all-zero grid".into(),
        ));
    }
    let transformed = dft2d(grid, size)?;
    let mut power: Vec<f64> = transformed.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    power.iter_mut().for_each(|p| *p /= total);
    Ok(Spectrum { size, power })
}

/// Empirical outcome frequencies `counts / M`.
pub fn estimate_spectrum(hist: &MeasurementHistogram) -> Spectrum {
    let m = hist.total as f64;
    Spectrum {
        size: hist.size,
        power: hist.counts.iter().map(|c| *c as f64 / m).collect(),
    }
}

/// `(1/2) sum |p - q|`.
pub fn tv_distance<P, Q>(p: &P, q: &Q) -> Result<f64>
where
    P: GridDistribution + ?Sized,
    Q: GridDistribution + ?Sized,
{
    let (a, b) = (p.values(), q.values());
    if p.grid_size() != q.grid_size() || a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok((sum / 2.0).min(1.0))
}
