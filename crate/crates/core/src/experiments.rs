//! Named, seeded end-to-end scenarios producing metric reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::classical::{
    backward_fine_structure, block, breakdown_time, breakdown_time_sampled, divergence_series,
    evolve_density, fit_lyapunov_ensemble, random_rational_point, random_rational_point_in_cell,
    Density, FitWindow,
};
use crate::error::{Error, Result};
use crate::maps::{
    discrete_step, lyapunov_exponent, CatMatrix, Direction, LatticePoint, LatticeSize,
};
use crate::quantum::{
    apply_map_step, measure_samples, prepare_state, qft2d, simulate_noisy, NoiseKind, NoiseModel,
};
use crate::rng::{stream, Purpose};
use crate::spectral::{estimate_spectrum, power_spectrum, tv_distance};

/// Maximum pairwise distance below which a backward-evolved block counts as
/// unsaturated for the growth-rate fit.
pub const FINE_SATURATION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Compare,
    Spectrum,
    Reversibility,
    Divergence,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compare" => Ok(Scenario::Compare),
            "spectrum" => Ok(Scenario::Spectrum),
            "reversibility" => Ok(Scenario::Reversibility),
            "divergence" => Ok(Scenario::Divergence),
            other => Err(Error::Parse(format!(
                "unknown scenario {other:?} (expected compare, spectrum, reversibility or divergence)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Compare => "compare",
            Scenario::Spectrum => "spectrum",
            Scenario::Reversibility => "reversibility",
            Scenario::Divergence => "divergence",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub matrix: CatMatrix,
    /// Lattice side `N`.
    pub size: LatticeSize,
    pub steps: usize,
    /// Fixed-point precision of the divergence arm.
    pub bits: u32,
    /// Density generator spec (`uniform`, `delta:x,y`, `gaussian:cx,cy,sigma`).
    pub density: String,
    pub noise: NoiseModel,
    pub gates_per_step: usize,
    pub samples: u64,
    pub trials: usize,
    /// Torus distance that counts as breakdown.
    pub threshold: f64,
    /// Side of the block of final points evolved backwards.
    pub block: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Defaults for everything except the scenario and the seed.
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        ExperimentConfig {
            scenario,
            matrix: CatMatrix::ARNOLD,
            size: LatticeSize::new(64).expect("power of two"),
            steps: 30,
            bits: 16,
            density: "gaussian:0,0,4".into(),
            noise: NoiseModel {
                kind: NoiseKind::Bitflip,
                epsilon: 0.0,
                trajectories: 100,
            },
            gates_per_step: 1,
            samples: 100_000,
            trials: 100,
            threshold: 0.25,
            block: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        NoiseModel::new(self.noise.kind, self.noise.epsilon, self.noise.trajectories)?;
        crate::maps::LatticeSize::from_bits(self.bits)?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be in (0, 0.5], got {}",
                self.threshold
            )));
        }
        if self.block == 0 || self.block > self.size.get() {
            return Err(Error::InvalidParameter(format!(
                "block side must be in [1, N={}], got {}",
                self.size, self.block
            )));
        }
        Density::generate(&self.density, self.size)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub metrics: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub provenance: Provenance,
    /// Wall-clock seconds per pipeline. Machine-dependent, so excluded from
    /// the serialized report.
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig) -> Self {
        ExperimentReport {
            scenario: cfg.scenario,
            metrics: BTreeMap::new(),
            series: BTreeMap::new(),
            provenance: Provenance {
                config: cfg.clone(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            timings: BTreeMap::new(),
        }
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    fn finish(self) -> Result<Self> {
        let bad = self
            .metrics
            .iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(k, v)| format!("{k} = {v}"))
            .or_else(|| {
                self.series
                    .iter()
                    .find(|(_, s)| s.iter().any(|v| !v.is_finite()))
                    .map(|(k, _)| format!("series {k}"))
            });
        match bad {
            Some(what) => Err(Error::InvalidParameter(format!("non-finite metric {what}"))),
            None => Ok(self),
        }
    }

    pub fn metric_value(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Re-runs the embedded configuration.
    pub fn replay(&self) -> Result<ExperimentReport> {
        run(&self.provenance.config)
    }

    /// Aligned plain-text rendering: metrics, then a per-step series table.
    pub fn to_table(&self) -> String {
        let mut out = format!("scenario: {}\n\n", self.scenario);
        let width = self
            .metrics
            .keys()
            .map(|k| k.len())
            .max()
            .unwrap_or(6)
            .max(6);
        out.push_str(&format!("{:<width$}  value\n", "metric"));
        for (k, v) in &self.metrics {
            out.push_str(&format!("{k:<width$}  {v:?}\n"));
        }
        if !self.series.is_empty() {
            let rows = self.series.values().map(Vec::len).max().unwrap_or(0);
            let cells: Vec<Vec<String>> = self
                .series
                .iter()
                .map(|(name, s)| {
                    std::iter::once(name.clone())
                        .chain(
                            (0..rows)
                                .map(|i| s.get(i).map(|v| format!("{v:?}")).unwrap_or_default()),
                        )
                        .collect()
                })
                .collect();
            let widths: Vec<usize> = cells
                .iter()
                .map(|c| c.iter().map(String::len).max().unwrap_or(0))
                .collect();
            out.push('\n');
            let index_width = rows.saturating_sub(1).to_string().len().max(4);
            for r in 0..=rows {
                let label = if r == 0 {
                    "step".to_string()
                } else {
                    (r - 1).to_string()
                };
                out.push_str(&format!("{label:>index_width$}"));
                for (c, w) in cells.iter().zip(&widths) {
                    out.push_str(&format!("  {:>w$}", c[r], w = *w));
                }
                out.push('\n');
            }
        }
        out
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::Compare => run_compare(cfg),
        Scenario::Spectrum => run_spectrum(cfg),
        Scenario::Reversibility => run_reversibility(cfg),
        Scenario::Divergence => run_divergence(cfg),
    }
}

/// Four arms on one initial density: the continuous map from `b`-bit
/// initial points against the exact reference, exact density transport,
/// noiseless and noisy statevector evolution.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let m = cfg.matrix;
    let density = Density::generate(&cfg.density, cfg.size)?;
    let mut report = ExperimentReport::new(cfg);

    // Arm 1: initial points drawn from the density, quantized to b bits.
    let weights =
        WeightedIndex::new(density.cells()).map_err(|e| Error::InvalidDensity(e.to_string()))?;
    let size = cfg.size;
    let sampler = |rng: &mut crate::rng::Stream| {
        let cell = LatticePoint::from_index(weights.sample(rng), size);
        random_rational_point_in_cell(rng, cell)
    };
    let breakdown =
        breakdown_time_sampled(&m, cfg.bits, cfg.threshold, cfg.trials, cfg.seed, sampler)
            .map_err(Error::in_arm("arm 1 (fixed-precision continuous map)"))?;
    let mut mean_distance = vec![0.0; cfg.steps + 1];
    for trial in 0..cfg.trials as u64 {
        let p0 = sampler(&mut stream(cfg.seed, Purpose::InitialPoint, &[trial, 0]));
        let s = divergence_series(&m, &p0, cfg.bits, cfg.steps)
            .map_err(Error::in_arm("arm 1 (fixed-precision continuous map)"))?;
        for (acc, d) in mean_distance.iter_mut().zip(s.distances()) {
            *acc += d / cfg.trials as f64;
        }
    }
    report.metric("arm1_breakdown_mean", breakdown.mean);
    report.metric(
        "arm1_breakdown_predicted",
        (cfg.bits as f64 - 1.0) * std::f64::consts::LN_2 / lyapunov_exponent(&m),
    );
    report.metric("arm1_final_mean_distance", mean_distance[cfg.steps]);
    report
        .series
        .insert("arm1_mean_distance".into(), mean_distance);

    // Arms 2 and 3, stepped together.
    let mut classical = density.clone();
    let mut psi = prepare_state(&density).map_err(Error::in_arm("arm 3 (noiseless quantum)"))?;
    let residual = |c: &Density, p: &crate::quantum::StateVector| {
        c.cells()
            .iter()
            .zip(p.probabilities())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    };
    let mut residuals = vec![residual(&classical, &psi)];
    for _ in 0..cfg.steps {
        classical = evolve_density(&classical, &m, 1, Direction::Forward);
        psi = apply_map_step(&psi, &m, Direction::Forward);
        residuals.push(residual(&classical, &psi));
    }
    report.metric(
        "arm23_max_residual",
        residuals.iter().copied().fold(0.0, f64::max),
    );
    report.series.insert("arm23_residual".into(), residuals);

    // Arm 4.
    let psi0 = prepare_state(&density).map_err(Error::in_arm("arm 4 (noisy quantum)"))?;
    let noisy = simulate_noisy(
        &psi0,
        &m,
        cfg.steps,
        &cfg.noise,
        cfg.gates_per_step,
        cfg.seed,
    )
    .map_err(Error::in_arm("arm 4 (noisy quantum)"))?;
    report.metric("arm4_final_mean_fidelity", noisy.mean_fidelity[cfg.steps]);
    report.metric(
        "arm4_final_fidelity_stderr",
        noisy.fidelity_stderr[cfg.steps],
    );
    report.metric(
        "arm4_final_error_free_fraction",
        noisy.error_free_fraction[cfg.steps],
    );
    report
        .series
        .insert("arm4_mean_fidelity".into(), noisy.mean_fidelity);
    report.finish()
}

/// QFT sampling of the evolved state against the classical power spectrum
/// of the same amplitudes.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let density = Density::generate(&cfg.density, cfg.size)?;
    let mut report = ExperimentReport::new(cfg);
    let mut psi = prepare_state(&density)?;
    for _ in 0..cfg.steps {
        psi = apply_map_step(&psi, &cfg.matrix, Direction::Forward);
    }

    let started = Instant::now();
    let transformed = qft2d(&psi, Direction::Forward);
    let hist = measure_samples(
        &transformed,
        cfg.samples,
        &mut stream(cfg.seed, Purpose::Measurement, &[0]),
    )
    .map_err(Error::in_arm("quantum pipeline"))?;
    let estimate = estimate_spectrum(&hist);
    report
        .timings
        .insert("quantum_seconds".into(), started.elapsed().as_secs_f64());

    let started = Instant::now();
    let exact =
        power_spectrum(psi.amplitudes(), cfg.size).map_err(Error::in_arm("classical pipeline"))?;
    report
        .timings
        .insert("classical_seconds".into(), started.elapsed().as_secs_f64());

    let qft_gap = transformed
        .probabilities()
        .iter()
        .zip(exact.power())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    report.metric("qft_vs_classical_max_abs", qft_gap);
    report.metric("tv_sampled_vs_exact", tv_distance(&estimate, &exact)?);
    report.metric("samples", cfg.samples as f64);

    // Trend over decades of sample sizes ending at `samples`.
    let mut sizes = Vec::new();
    let mut tvs = Vec::new();
    for (i, div) in [100u64, 10, 1].into_iter().enumerate() {
        let m = cfg.samples / div;
        if m == 0 {
            continue;
        }
        let h = measure_samples(
            &transformed,
            m,
            &mut stream(cfg.seed, Purpose::Measurement, &[1, i as u64]),
        )?;
        sizes.push(m as f64);
        tvs.push(tv_distance(&estimate_spectrum(&h), &exact)?);
    }
    report.series.insert("trend_samples".into(), sizes);
    report.series.insert("trend_tv".into(), tvs);
    report.finish()
}

/// Exact forward/backward identity on the full lattice and on a random
/// density, plus backward evolution of a block of final points.
pub fn run_reversibility(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let m = cfg.matrix;
    let size = cfg.size;
    let mut report = ExperimentReport::new(cfg);

    let n = size.get();
    let forward = m.reduce(n);
    let backward = m.inverse().reduce(n);
    let mut mismatched = 0u64;
    for x in 0..n {
        for y in 0..n {
            let (mut px, mut py) = (x, y);
            for _ in 0..cfg.steps {
                (px, py) = forward.apply(px, py);
            }
            for _ in 0..cfg.steps {
                (px, py) = backward.apply(px, py);
            }
            mismatched += u64::from((px, py) != (x, y));
        }
    }
    report.metric("lattice_mismatched_cells", mismatched as f64);

    let random = Density::random(size, &mut stream(cfg.seed, Purpose::RandomDensity, &[]))?;
    let mut evolved = random.clone();
    for _ in 0..cfg.steps {
        evolved = evolve_density(&evolved, &m, 1, Direction::Forward);
    }
    for _ in 0..cfg.steps {
        evolved = evolve_density(&evolved, &m, 1, Direction::Backward);
    }
    let density_mismatches = random
        .cells()
        .iter()
        .zip(evolved.cells())
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    report.metric("density_mismatched_cells", density_mismatches as f64);

    let centre = LatticePoint::new(n / 2, n / 2, size)?;
    let points = block(centre, cfg.block);
    let fine = backward_fine_structure(&m, &points, cfg.steps)?;
    let cardinality: Vec<f64> = fine.steps.iter().map(|s| s.points.len() as f64).collect();
    report.metric("fine_block_cells", points.len() as f64);
    report.metric(
        "fine_min_cardinality",
        cardinality.iter().copied().fold(f64::INFINITY, f64::min),
    );
    report.metric(
        "fine_max_cardinality",
        cardinality.iter().copied().fold(0.0, f64::max),
    );
    let lambda = lyapunov_exponent(&m);
    report.metric("lyapunov_exact", lambda);
    if let Some(rate) = fine.growth_rate(FINE_SATURATION) {
        report.metric("fine_growth_rate", rate);
        report.metric("fine_growth_relative_error", (rate - lambda).abs() / lambda);
    }
    report.series.insert("fine_cardinality".into(), cardinality);
    report.series.insert(
        "fine_max_distance".into(),
        fine.steps.iter().map(|s| s.max_distance).collect(),
    );
    report.series.insert(
        "fine_mean_distance".into(),
        fine.steps.iter().map(|s| s.mean_distance).collect(),
    );
    report.series.insert(
        "fine_min_distance".into(),
        fine.steps.iter().map(|s| s.min_distance).collect(),
    );
    // Sanity: the block really was evolved backwards.
    debug_assert!(
        fine.steps.len() < 2 || {
            let p = fine.steps[1].points[0];
            points.contains(&discrete_step(&m, p))
        }
    );
    report.finish()
}

/// Divergence of uniformly random `b`-bit initial points from the exact
/// rational reference: breakdown time and fitted Lyapunov exponent.
pub fn run_divergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let m = cfg.matrix;
    let mut report = ExperimentReport::new(cfg);
    let lambda = lyapunov_exponent(&m);
    let breakdown = breakdown_time(&m, cfg.bits, cfg.threshold, cfg.trials, cfg.seed)?;
    report.metric("lyapunov_exact", lambda);
    report.metric("breakdown_mean", breakdown.mean);
    report.metric(
        "breakdown_predicted",
        (cfg.bits as f64 - 1.0) * std::f64::consts::LN_2 / lambda,
    );
    match fit_lyapunov_ensemble(&m, cfg.bits, cfg.trials, cfg.seed, FitWindow::default()) {
        Ok(fit) => {
            report.metric("lyapunov_fit", fit.mean);
            report.metric("lyapunov_fit_trials", fit.fits.len() as f64);
            report.metric("lyapunov_fit_skipped", fit.skipped as f64);
        }
        Err(Error::InsufficientData { .. }) => {
            report.metric("lyapunov_fit_trials", 0.0);
            report.metric("lyapunov_fit_skipped", cfg.trials as f64);
        }
        Err(e) => return Err(e),
    }
    let mut mean_distance = vec![0.0; cfg.steps + 1];
    for trial in 0..cfg.trials as u64 {
        let p0 = random_rational_point(&mut stream(cfg.seed, Purpose::InitialPoint, &[trial, 0]));
        let s = divergence_series(&m, &p0, cfg.bits, cfg.steps)?;
        for (acc, d) in mean_distance.iter_mut().zip(s.distances()) {
            *acc += d / cfg.trials as f64;
        }
    }
    report.series.insert("mean_distance".into(), mean_distance);
    report.finish()
}
