use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{CatMatrix, Direction, LatticePoint, LatticeSize};

/// Allowed deviation of the total mass from 1 for a valid density.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Densities read from files are renormalized if their mass lies within
/// `1 +/- FILE_NORMALIZATION_TOLERANCE`, and rejected otherwise.
pub const FILE_NORMALIZATION_TOLERANCE: f64 = 0.01;

/// Nonnegative, normalized distribution over the `N x N` lattice, stored
/// row-major with flat index `x * N + y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    size: LatticeSize,
    cells: Vec<f64>,
}

impl Density {
    pub fn new(size: LatticeSize, cells: Vec<f64>) -> Result<Self> {
        let total = check_cells(size, &cells)?;
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDensity(format!(
                "total mass {total} is not 1"
            )));
        }
        Ok(Density { size, cells })
    }

    /// Scales `cells` to unit mass provided the mass is within
    /// `1 +/- tolerance`.
    pub fn normalized(size: LatticeSize, mut cells: Vec<f64>, tolerance: f64) -> Result<Self> {
        let total = check_cells(size, &cells)?;
        if (total - 1.0).abs() > tolerance {
            return Err(Error::InvalidDensity(format!(
                "total mass {total} is further than {tolerance} from 1"
            )));
        }
        cells.iter_mut().for_each(|c| *c /= total);
        Density::new(size, cells)
    }

    pub fn uniform(size: LatticeSize) -> Result<Self> {
        let len = size.cells()?;
        Ok(Density {
            size,
            cells: vec![1.0 / len as f64; len],
        })
    }

    pub fn delta(p: LatticePoint) -> Result<Self> {
        let mut cells = vec![0.0; p.size.cells()?];
        cells[p.index()] = 1.0;
        Ok(Density {
            size: p.size,
            cells,
        })
    }

    /// Periodic Gaussian centred at `(cx, cy)` with width `sigma`, all in
    /// lattice-cell units, using wrap-around distance on each axis.
    pub fn gaussian(size: LatticeSize, cx: f64, cy: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "gaussian sigma must be positive, got {sigma}"
            )));
        }
        let n = size.get() as f64;
        if !((0.0..n).contains(&cx) && (0.0..n).contains(&cy)) {
            return Err(Error::InvalidDensity(format!(
                "gaussian centre ({cx}, {cy}) outside [0, {n})"
            )));
        }
        let wrap = |u: f64, c: f64| {
            let d = (u - c).abs();
            d.min(n - d)
        };
        let nn = size.get();
        let mut cells = Vec::with_capacity(size.cells()?);
        for x in 0..nn {
            for y in 0..nn {
                let dx = wrap(x as f64, cx);
                let dy = wrap(y as f64, cy);
                cells.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
            }
        }
        let total: f64 = cells.iter().sum();
        if total == 0.0 {
            return Err(Error::InvalidDensity(
                "gaussian underflowed to zero mass".into(),
            ));
        }
        cells.iter_mut().for_each(|c| *c /= total);
        Ok(Density { size, cells })
    }

    /// Random density with i.i.d. uniform cell weights.
    pub fn random(size: LatticeSize, rng: &mut impl Rng) -> Result<Self> {
        let mut cells: Vec<f64> = (0..size.cells()?).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = cells.iter().sum();
        cells.iter_mut().for_each(|c| *c /= total);
        Ok(Density { size, cells })
    }

    /// Builds a density from a generator spec: `uniform`, `delta:x,y` or
    /// `gaussian:cx,cy,sigma`.
    pub fn generate(spec: &str, size: LatticeSize) -> Result<Self> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let numbers = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("density {spec:?}: {e}")))
                })
                .collect()
        };
        match name {
            "uniform" if args.is_empty() => Density::uniform(size),
            "delta" => {
                let parts: Vec<u64> = args
                    .split(',')
                    .map(|a| a.trim().parse::<u64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse(format!("density {spec:?}: {e}")))?;
                match parts[..] {
                    [x, y] => Density::delta(LatticePoint::new(x, y, size)?),
                    _ => Err(Error::Parse(format!("density {spec:?}: expected delta:x,y"))),
                }
            }
            "gaussian" => match numbers()?[..] {
                [cx, cy, sigma] => Density::gaussian(size, cx, cy, sigma),
                _ => Err(Error::Parse(format!(
                    "density {spec:?}: expected gaussian:cx,cy,sigma"
                ))),
            },
            _ => Err(Error::Parse(format!(
                "unknown density generator {spec:?} (expected uniform, delta:x,y or gaussian:cx,cy,sigma)"
            ))),
        }
    }

    pub fn size(&self) -> LatticeSize {
        self.size
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, p: LatticePoint) -> f64 {
        self.cells[p.index()]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }
}

fn check_cells(size: LatticeSize, cells: &[f64]) -> Result<f64> {
    let expected = size.cells()?;
    if cells.len() != expected {
        return Err(Error::InvalidDensity(format!(
            "expected {expected} cells for N={size}, got {}",
            cells.len()
        )));
    }
    if let Some((i, v)) = cells
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(Error::InvalidDensity(format!(
            "cell {i} has invalid mass {v}"
        )));
    }
    Ok(cells.iter().sum())
}

/// Moves the mass of every cell to its `t`-step image (forward) or
/// preimage (backward). Values are only relocated, never recombined.
pub fn evolve_density(dens: &Density, m: &CatMatrix, t: u64, direction: Direction) -> Density {
    let size = dens.size;
    let n = size.get();
    // Gather: out[p] = in[T^{-t} p].
    let pull = m.oriented(direction).inverse().reduce(n).pow(t);
    let mut cells = vec![0.0; dens.cells.len()];
    cells
        .par_chunks_mut(n as usize)
        .enumerate()
        .for_each(|(x, row)| {
            for (y, out) in row.iter_mut().enumerate() {
                let (sx, sy) = pull.apply(x as u64, y as u64);
                *out = dens.cells[(sx * n + sy) as usize];
            }
        });
    Density { size, cells }
}
