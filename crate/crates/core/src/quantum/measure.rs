use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::maps::LatticeSize;

/// Outcome counts over the `N x N` cells, flat index `x * N + y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementHistogram {
    pub size: LatticeSize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl MeasurementHistogram {
    pub fn new(size: LatticeSize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != size.cells()? {
            return Err(Error::ShapeMismatch {
                left: counts.len(),
                right: size.cells()?,
            });
        }
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidParameter("histogram has no samples".into()));
        }
        Ok(MeasurementHistogram {
            size,
            counts,
            total,
        })
    }
}

/// Draws `samples` computational-basis outcomes from `|psi|^2`.
pub fn measure_samples(
    psi: &StateVector,
    samples: u64,
    rng: &mut impl Rng,
) -> Result<MeasurementHistogram> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let dist = WeightedIndex::new(psi.probabilities())
        .map_err(|e| Error::InvalidState(format!("cannot sample: {e}")))?;
    let mut counts = vec![0u64; psi.amplitudes().len()];
    for _ in 0..samples {
        counts[dist.sample(rng)] += 1;
    }
    Ok(MeasurementHistogram {
        size: psi.size(),
        counts,
        total: samples,
    })
}
