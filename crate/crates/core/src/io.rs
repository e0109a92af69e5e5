//! Text formats: densities, spectra and state dumps.
//!
//! Floats are written with Rust's shortest round-trip formatting, numbers
//! use `.` as decimal separator and lines end in LF.

use std::fmt::Write as _;
use std::path::Path;

use crate::classical::{Density, FILE_NORMALIZATION_TOLERANCE};
use crate::error::{Error, Result};
use crate::maps::LatticeSize;
use crate::spectral::Spectrum;

/// Parses the density text format: a line with `N`, then `N` lines of `N`
/// whitespace-separated nonnegative decimals. Mass within 1% of unity is
/// renormalized; anything further off is rejected.
pub fn parse_density(text: &str) -> Result<Density> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("density file is empty".into()))?;
    let size: LatticeSize = header.trim().parse()?;
    let n = size.get() as usize;
    let mut cells = Vec::with_capacity(size.cells()?);
    for row in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("density file has {row} rows, expected {n}")))?;
        let before = cells.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: {tok:?}: {e}", row + 1)))?;
            cells.push(v);
        }
        if cells.len() - before != n {
            return Err(Error::Parse(format!(
                "row {} has {} values, expected {n}",
                row + 1,
                cells.len() - before
            )));
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse(format!("density file has more than {n} rows")));
    }
    Density::normalized(size, cells, FILE_NORMALIZATION_TOLERANCE)
}

pub fn read_density(path: &Path) -> Result<Density> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_density(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn format_density(dens: &Density) -> String {
    let n = dens.size().get() as usize;
    let mut out = format!("{n}\n");
    for row in dens.cells().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// `x,y,mass` rows with a header.
pub fn density_csv(dens: &Density) -> String {
    grid_csv(["x", "y", "mass"], dens.size(), dens.cells())
}

/// `k_x,k_y,power` rows with a header.
pub fn spectrum_csv(spec: &Spectrum) -> String {
    grid_csv(["k_x", "k_y", "power"], spec.size(), spec.power())
}

/// Dense row-major `[[...], ...]` array indexed `[k_x][k_y]`.
pub fn spectrum_json(spec: &Spectrum) -> String {
    grid_json(spec.size(), spec.power())
}

pub fn density_json(dens: &Density) -> String {
    grid_json(dens.size(), dens.cells())
}

fn grid_csv(header: [&str; 3], size: LatticeSize, values: &[f64]) -> String {
    let n = size.get();
    let mut out = header.join(",");
    out.push('\n');
    for (i, v) in values.iter().enumerate() {
        let i = i as u64;
        let _ = writeln!(out, "{},{},{}", i / n, i % n, v);
    }
    out
}

fn grid_json(size: LatticeSize, values: &[f64]) -> String {
    let rows: Vec<&[f64]> = values.chunks(size.get() as usize).collect();
    let mut out = serde_json::to_string(&rows).expect("finite values serialize");
    out.push('\n');
    out
}
