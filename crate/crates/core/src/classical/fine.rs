use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::maps::{CatMatrix, LatticePoint, LatticeSize};

/// Preimage set after some number of backward steps, with pairwise torus
/// distance statistics (all zero for a single point).
#[derive(Clone, Debug, PartialEq)]
pub struct FineStep {
    pub points: Vec<LatticePoint>,
    pub min_distance: f64,
    pub max_distance: f64,
    pub mean_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FineStructure {
    /// Entry `s` holds the `s`-step preimages; entry 0 is the input set.
    pub steps: Vec<FineStep>,
}

impl FineStructure {
    /// Least-squares slope of `ln(max pairwise distance)` over the leading
    /// steps whose maximum distance is still below `saturation`. `None`
    /// with fewer than two such steps or a single point.
    pub fn growth_rate(&self, saturation: f64) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .steps
            .iter()
            .enumerate()
            .take_while(|(_, s)| s.max_distance < saturation)
            .filter(|(_, s)| s.max_distance > 0.0)
            .map(|(t, s)| (t as f64, s.max_distance.ln()))
            .collect();
        if points.len() < 2 {
            return None;
        }
        let k = points.len() as f64;
        let mt = points.iter().map(|p| p.0).sum::<f64>() / k;
        let ml = points.iter().map(|p| p.1).sum::<f64>() / k;
        let num: f64 = points.iter().map(|(t, l)| (t - mt) * (l - ml)).sum();
        let den: f64 = points.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
        Some(num / den)
    }
}

/// `k x k` block of adjacent cells with lower corner `origin`, wrapping
/// around the torus.
pub fn block(origin: LatticePoint, k: u64) -> Vec<LatticePoint> {
    let n = origin.size.get();
    let mut out = Vec::with_capacity((k * k) as usize);
    for dx in 0..k {
        for dy in 0..k {
            out.push(LatticePoint {
                x: (origin.x + dx) % n,
                y: (origin.y + dy) % n,
                size: origin.size,
            });
        }
    }
    out
}

fn stats(points: &[LatticePoint]) -> FineStep {
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let d = p.torus_distance(q);
            min = min.min(d);
            max = max.max(d);
            sum += d;
            pairs += 1;
        }
    }
    FineStep {
        points: points.to_vec(),
        min_distance: if pairs == 0 { 0.0 } else { min },
        max_distance: max,
        mean_distance: if pairs == 0 { 0.0 } else { sum / pairs as f64 },
    }
}

/// Iterates a set of closely spaced lattice points backwards `t` steps,
/// recording the preimage set and its spread after every step.
pub fn backward_fine_structure(
    m: &CatMatrix,
    points: &[LatticePoint],
    t: usize,
) -> Result<FineStructure> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidParameter("fine structure needs at least one point".into()))?;
    let size: LatticeSize = first.size;
    if let Some(p) = points.iter().find(|p| p.size != size) {
        return Err(Error::InvalidParameter(format!(
            "points mix lattice sizes {size} and {}",
            p.size
        )));
    }
    let distinct: BTreeSet<LatticePoint> = points.iter().copied().collect();
    let mut current: Vec<LatticePoint> = distinct.into_iter().collect();
    let back = m.inverse().reduce(size.get());
    let mut steps = Vec::with_capacity(t + 1);
    steps.push(stats(&current));
    for _ in 0..t {
        for p in current.iter_mut() {
            let (x, y) = back.apply(p.x, p.y);
            *p = LatticePoint { x, y, size };
        }
        steps.push(stats(&current));
    }
    Ok(FineStructure { steps })
}
