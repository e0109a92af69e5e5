//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use catlab_core::classical::{
    backward_fine_structure, block, breakdown_time, evolve_density, fit_lyapunov_ensemble, Density,
    FitWindow,
};
use catlab_core::maps::{
    discrete_step, lyapunov_exponent, CatMatrix, Direction, LatticePoint, LatticeSize,
    RationalPoint,
};
use catlab_core::quantum::{
    apply_map_step, apply_noise, fidelity, measure_samples, prepare_state, qft2d, simulate_noisy,
    NoiseKind, NoiseModel, StateVector,
};
use catlab_core::rng::{stream, Purpose};
use catlab_core::spectral::{estimate_spectrum, power_spectrum, tv_distance};

const ARNOLD_LAMBDA: f64 = 0.9624;
const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn size(n: u64) -> LatticeSize {
    LatticeSize::new(n).unwrap()
}

fn within_time(started: Instant, limit: Duration, detail: String) -> Outcome {
    let elapsed = started.elapsed();
    if elapsed > limit {
        Err(format!("{detail}; took {elapsed:?}, limit {limit:?}"))
    } else {
        Ok(format!("{detail}; {elapsed:.2?}"))
    }
}

fn exactness_and_reversibility() -> Outcome {
    let started = Instant::now();
    let m = CatMatrix::ARNOLD;
    let t = 100;
    for n in [4u64, 16, 64, 256] {
        let s = size(n);
        let mut mismatches = 0usize;
        for i in 0..s.cells().unwrap() {
            let p0 = LatticePoint::from_index(i, s);
            let mut p = p0;
            for _ in 0..t {
                p = discrete_step(&m, p);
            }
            for _ in 0..t {
                p = catlab_core::maps::discrete_inverse_step(&m, p);
            }
            mismatches += usize::from(p != p0);
        }
        let dens = Density::random(s, &mut stream(SEED, Purpose::RandomDensity, &[n])).unwrap();
        let mut e = dens.clone();
        for _ in 0..t {
            e = evolve_density(&e, &m, 1, Direction::Forward);
        }
        for _ in 0..t {
            e = evolve_density(&e, &m, 1, Direction::Backward);
        }
        let density_mismatches = e
            .cells()
            .iter()
            .zip(dens.cells())
            .filter(|(a, b)| a.to_bits() != b.to_bits())
            .count();
        if mismatches + density_mismatches != 0 {
            return Err(format!(
                "N={n}: {mismatches} cell and {density_mismatches} density mismatches"
            ));
        }
    }
    within_time(
        started,
        Duration::from_secs(5),
        "0 mismatches for N in {4,16,64,256}, t=100".into(),
    )
}

fn rational_lattice_equivalence() -> Outcome {
    let started = Instant::now();
    let m = CatMatrix::ARNOLD;
    let mut checked = 0usize;
    for bits in 1..=10u32 {
        let n = 1u64 << bits;
        let s = size(n);
        for x in 0..n {
            for y in 0..n {
                let exact = RationalPoint::new(x, y, n).unwrap().step(&m);
                let lattice = discrete_step(&m, LatticePoint::new(x, y, s).unwrap());
                if exact.px != lattice.x.into()
                    || exact.py != lattice.y.into()
                    || exact.q != n.into()
                {
                    return Err(format!("N={n}: ({x},{y}) maps to {exact:?} vs {lattice:?}"));
                }
                checked += 1;
            }
        }
    }
    within_time(
        started,
        Duration::from_secs(10),
        format!("{checked} cells identical for N = 2..2^10"),
    )
}

fn lyapunov_fit() -> Outcome {
    let started = Instant::now();
    let m = CatMatrix::ARNOLD;
    let exact = lyapunov_exponent(&m);
    let mut detail = Vec::new();
    for bits in [16u32, 24, 32] {
        let fit = fit_lyapunov_ensemble(&m, bits, 100, SEED, FitWindow::default())
            .map_err(|e| e.to_string())?;
        let rel = (fit.mean - ARNOLD_LAMBDA).abs() / ARNOLD_LAMBDA;
        detail.push(format!(
            "b={bits}: {:.4} ({} fits)",
            fit.mean,
            fit.fits.len()
        ));
        if rel > 0.10 || fit.fits.len() < 100 || (fit.mean - exact).abs() / exact > 0.10 {
            return Err(format!(
                "b={bits}: fitted {} over {} trials",
                fit.mean,
                fit.fits.len()
            ));
        }
    }
    within_time(started, Duration::from_secs(10), detail.join(", "))
}

fn breakdown() -> Outcome {
    let started = Instant::now();
    let m = CatMatrix::ARNOLD;
    let lambda = lyapunov_exponent(&m);
    // The criterion is about the population mean, which sits close to the
    // upper edge of the tolerance at b=32; 10^5 trials bring the standard
    // error to ~0.004 steps.
    let trials = 100_000;
    let mut detail = Vec::new();
    let mut failed = false;
    for bits in [16u32, 32] {
        let target = ((bits as f64 - 1.0) * std::f64::consts::LN_2 / lambda).round();
        let stats = breakdown_time(&m, bits, 0.25, trials, SEED).map_err(|e| e.to_string())?;
        detail.push(format!(
            "b={bits}: mean {:.3} vs {target} +/- 2",
            stats.mean
        ));
        failed |= (stats.mean - target).abs() > 2.0;
    }
    let detail = detail.join(", ");
    if failed {
        return Err(detail);
    }
    within_time(started, Duration::from_secs(10), detail)
}

fn quantum_classical_equivalence() -> Outcome {
    let m = CatMatrix::ARNOLD;
    let mut detail = Vec::new();
    for n in [16u64, 64, 256] {
        let started = Instant::now();
        let dens =
            Density::random(size(n), &mut stream(SEED, Purpose::RandomDensity, &[n])).unwrap();
        let mut classical = dens.clone();
        let mut psi = prepare_state(&dens).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for _ in 0..50 {
            classical = evolve_density(&classical, &m, 1, Direction::Forward);
            psi = apply_map_step(&psi, &m, Direction::Forward);
            let diff = psi
                .probabilities()
                .iter()
                .zip(classical.cells())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(diff);
        }
        if worst >= 1e-12 {
            return Err(format!("N={n}: max abs difference {worst:e}"));
        }
        if started.elapsed() > Duration::from_secs(30) {
            return Err(format!("N={n}: took {:?}", started.elapsed()));
        }
        detail.push(format!("N={n}: {worst:.1e} in {:.2?}", started.elapsed()));
    }
    Ok(detail.join(", "))
}

fn random_state(s: LatticeSize, rng: &mut impl Rng) -> StateVector {
    let mut amps: Vec<Complex64> = (0..s.cells().unwrap())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(s, amps).unwrap()
}

fn qft_correctness() -> Outcome {
    let s = size(32);
    let mut rng = stream(SEED, Purpose::RandomDensity, &[6]);
    let (mut round_trip, mut spectral_gap) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let psi = random_state(s, &mut rng);
        let forward = qft2d(&psi, Direction::Forward);
        let back = qft2d(&forward, Direction::Backward);
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            round_trip = round_trip.max((a - b).norm());
        }
        let spectrum = power_spectrum(psi.amplitudes(), s).map_err(|e| e.to_string())?;
        for (p, q) in forward.probabilities().iter().zip(spectrum.power()) {
            spectral_gap = spectral_gap.max((p - q).abs());
        }
    }
    let detail = format!("round trip {round_trip:.1e}, QFT vs power spectrum {spectral_gap:.1e}");
    if round_trip <= 1e-12 && spectral_gap <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn noise_statistics() -> Outcome {
    let s = size(32);
    let m = CatMatrix::ARNOLD;
    let eps = 0.01;
    let trajectories = 10_000u64;
    let delta = StateVector::basis(s, 5, 9).unwrap();
    let ideal = apply_map_step(&delta, &m, Direction::Forward);
    let ideal_outcome = ideal
        .probabilities()
        .iter()
        .position(|p| *p == 1.0)
        .unwrap();
    let model = NoiseModel::new(NoiseKind::Bitflip, eps, trajectories as usize).unwrap();
    let mut unchanged = 0u64;
    for j in 0..trajectories {
        let mut psi = ideal.clone();
        apply_noise(&mut psi, &model, &mut stream(SEED, Purpose::Noise, &[j, 1]));
        let hist = measure_samples(&psi, 1, &mut stream(SEED, Purpose::Measurement, &[j])).unwrap();
        unchanged += hist.counts[ideal_outcome];
    }
    let p = (1.0f64 - eps).powi(10);
    let frac = unchanged as f64 / trajectories as f64;
    let sigma = (p * (1.0 - p) / trajectories as f64).sqrt();
    let z = (frac - p) / sigma;

    let clean = NoiseModel::new(NoiseKind::Depolarizing, 0.0, 100).unwrap();
    let run = simulate_noisy(&delta, &m, 5, &clean, 1, SEED).map_err(|e| e.to_string())?;
    let mut untouched = ideal.clone();
    apply_noise(
        &mut untouched,
        &clean,
        &mut stream(SEED, Purpose::Noise, &[0, 0]),
    );
    let direct = fidelity(&untouched, &ideal).unwrap();
    let exact_one = run.mean_fidelity.iter().all(|f| *f == 1.0) && direct == 1.0;

    let detail =
        format!("unchanged {frac} vs {p:.4} (z = {z:.2}); eps=0 fidelity exactly 1: {exact_one}");
    if z.abs() <= 3.0 && exact_one {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spectrum_sampling() -> Outcome {
    let s = size(16);
    let m = CatMatrix::ARNOLD;
    let dens = Density::gaussian(s, 4.0, 11.0, 2.0).unwrap();
    let mut psi = prepare_state(&dens).unwrap();
    for _ in 0..10 {
        psi = apply_map_step(&psi, &m, Direction::Forward);
    }
    let exact = power_spectrum(psi.amplitudes(), s).unwrap();
    let transformed = qft2d(&psi, Direction::Forward);
    let seeds = 8u64;
    let mut mean_tv = Vec::new();
    for (i, samples) in [1_000u64, 10_000, 100_000].into_iter().enumerate() {
        let mut total = 0.0;
        for seed in 0..seeds {
            let h = measure_samples(
                &transformed,
                samples,
                &mut stream(SEED + seed, Purpose::Measurement, &[i as u64]),
            )
            .unwrap();
            total += tv_distance(&estimate_spectrum(&h), &exact).unwrap();
        }
        mean_tv.push(total / seeds as f64);
    }
    let h = measure_samples(
        &transformed,
        100_000,
        &mut stream(SEED, Purpose::Measurement, &[99]),
    )
    .unwrap();
    let tv = tv_distance(&estimate_spectrum(&h), &exact).unwrap();
    let monotone = mean_tv.windows(2).all(|w| w[1] < w[0]);
    let detail = format!("TV at M=1e5: {tv:.4}; mean TV over M=1e3,1e4,1e5: {mean_tv:.4?}");
    if tv < 0.05 && monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fine_structure() -> Outcome {
    let m = CatMatrix::ARNOLD;
    let s = size(1 << 10);
    let lambda = lyapunov_exponent(&m);
    let mut detail = Vec::new();
    for k in [2u64, 4, 8] {
        let points = block(LatticePoint::new(300, 700, s).unwrap(), k);
        let fs = backward_fine_structure(&m, &points, 20).map_err(|e| e.to_string())?;
        if let Some((t, step)) = fs
            .steps
            .iter()
            .enumerate()
            .find(|(_, st)| st.points.len() as u64 != k * k)
        {
            return Err(format!(
                "k={k}: cardinality {} at step {t}",
                step.points.len()
            ));
        }
        let rate = fs
            .growth_rate(catlab_core::experiments::FINE_SATURATION)
            .ok_or_else(|| format!("k={k}: no pre-saturation steps"))?;
        let rel = (rate - lambda).abs() / lambda;
        detail.push(format!("k={k}: rate {rate:.4}"));
        if rel > 0.25 {
            return Err(format!("k={k}: growth rate {rate} vs {lambda}"));
        }
    }
    Ok(format!(
        "cardinality preserved for t <= 20; {}",
        detail.join(", ")
    ))
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_catlab");
    let invocations: &[&[&str]] = &[
        &["period", "--n", "1024"],
        &[
            "divergence",
            "--point",
            "7,3,21",
            "--bits",
            "16",
            "--out",
            "json",
        ],
        &[
            "divergence",
            "--bits",
            "16",
            "--trials",
            "50",
            "--seed",
            "7",
            "--out",
            "csv",
        ],
        &[
            "evolve",
            "--n",
            "16",
            "--density",
            "gaussian:3,5,2",
            "--steps",
            "7",
            "--out",
            "csv",
        ],
        &[
            "quantum",
            "--n",
            "16",
            "--steps",
            "6",
            "--noise",
            "depolarizing:0.02",
            "--trajectories",
            "200",
            "--seed",
            "7",
        ],
        &[
            "spectrum",
            "--n",
            "16",
            "--steps",
            "4",
            "--samples",
            "5000",
            "--seed",
            "7",
            "--out",
            "json",
        ],
        &[
            "compare",
            "--n",
            "16",
            "--steps",
            "12",
            "--noise",
            "bitflip:0.01",
            "--trajectories",
            "100",
            "--seed",
            "7",
        ],
        &["reversibility", "--n", "64", "--steps", "20", "--seed", "7"],
    ];
    for args in invocations {
        let run = || {
            Command::new(bin)
                .args(*args)
                .env("CATLAB_THREADS", "3")
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (run()?, run()?);
        let single = Command::new(bin)
            .args(*args)
            .env("CATLAB_THREADS", "1")
            .output()
            .map_err(|e| e.to_string())?;
        if !a.status.success() {
            return Err(format!(
                "{args:?} failed: {}",
                String::from_utf8_lossy(&a.stderr)
            ));
        }
        if a.stdout != b.stdout || a.stdout != single.stdout || a.stdout.is_empty() {
            return Err(format!("{args:?}: outputs differ between identical runs"));
        }
    }
    Ok(format!(
        "{} invocations byte-identical across reruns and thread counts",
        invocations.len()
    ))
}

fn main() {
    let criteria: &[Criterion] = &[
        ("1 exactness & reversibility", exactness_and_reversibility),
        (
            "2 rational-lattice equivalence",
            rational_lattice_equivalence,
        ),
        ("3 lyapunov fit", lyapunov_fit),
        ("4 breakdown time", breakdown),
        (
            "5 quantum-classical equivalence",
            quantum_classical_equivalence,
        ),
        ("6 qft correctness", qft_correctness),
        ("7 noise statistics", noise_statistics),
        ("8 spectrum sampling", spectrum_sampling),
        ("9 fine structure", fine_structure),
        ("10 cli determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
