//! Fixed-precision trajectories versus an exact rational reference.
//!
//! With an integer map matrix, `b`-bit fixed-point iteration is itself
//! exact: the mantissas evolve as the discrete map on the `2^b` lattice.
//! All precision loss is the initial quantization `eps0 <= 2^(-b-1)` per
//! axis, which the chaotic dynamics then amplifies at the Lyapunov rate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{
    lyapunov_exponent, CatMatrix, LatticePoint, LatticeSize, RationalPoint, MAX_LATTICE_BITS,
};
use crate::rng::{stream, Purpose, Stream};

/// `2^64 + 1`: odd and larger than any supported `2^b`.
pub fn reference_denominator() -> BigInt {
    (BigInt::one() << 64u32) + 1
}

/// Point with `b` fractional bits per coordinate: `(mx, my) * 2^-b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPointState {
    pub mx: u64,
    pub my: u64,
    pub bits: u32,
}

impl FixedPointState {
    /// Rounds `p` to the nearest `b`-bit grid point (ties upward), wrapping
    /// `1.0` to `0`.
    pub fn from_rational(p: &RationalPoint, bits: u32) -> Result<Self> {
        check_bits(bits)?;
        let scale = BigInt::one() << bits;
        let round = |num: &BigInt| -> u64 {
            let twice_q: BigInt = &p.q * 2u32;
            let scaled: BigInt = num * &scale * 2u32 + &p.q;
            let r = scaled.div_floor(&twice_q);
            (r.mod_floor(&scale))
                .to_u64()
                .expect("reduced below 2^bits")
        };
        Ok(FixedPointState {
            mx: round(&p.px),
            my: round(&p.py),
            bits,
        })
    }

    pub fn lattice_point(&self) -> LatticePoint {
        LatticePoint {
            x: self.mx,
            y: self.my,
            size: LatticeSize::from_bits(self.bits).expect("validated at construction"),
        }
    }

    pub fn step(&self, m: &CatMatrix) -> FixedPointState {
        let (mx, my) = m.reduce(1 << self.bits).apply(self.mx, self.my);
        FixedPointState {
            mx,
            my,
            bits: self.bits,
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        let s = (self.bits as f64).exp2();
        (self.mx as f64 / s, self.my as f64 / s)
    }
}

/// Wrap-around Euclidean torus distance between an exact rational point and
/// a fixed-point state, computed exactly and rounded once to `f64`.
pub fn torus_distance_exact(p: &RationalPoint, f: &FixedPointState) -> f64 {
    let scale = BigInt::one() << f.bits;
    let den = &p.q * &scale;
    let den_f = den.to_f64().expect("finite");
    let axis = |num: &BigInt, mant: u64| -> f64 {
        let diff = (num * &scale - BigInt::from(mant) * &p.q).mod_floor(&den);
        let other = &den - &diff;
        let wrapped = if diff <= other { diff } else { other };
        wrapped.to_f64().expect("finite") / den_f
    };
    axis(&p.px, f.mx).hypot(axis(&p.py, f.my))
}

fn is_exactly_representable(p: &RationalPoint, f: &FixedPointState) -> bool {
    let scale = BigInt::one() << f.bits;
    let same = |num: &BigInt, mant: u64| {
        (num * &scale - BigInt::from(mant) * &p.q)
            .mod_floor(&(&p.q * &scale))
            .is_zero()
    };
    same(&p.px, f.mx) && same(&p.py, f.my)
}

/// Per-step torus distance between the exact and the `b`-bit trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceSeries {
    distances: Vec<f64>,
    degenerate: bool,
}

impl DivergenceSeries {
    /// Wraps precomputed distances `d_0, d_1, ...`; `d_0` is the initial offset.
    pub fn from_distances(distances: Vec<f64>) -> Result<Self> {
        let max = std::f64::consts::SQRT_2 / 2.0;
        if distances.is_empty() {
            return Err(Error::InvalidParameter(
                "divergence series needs d_0".into(),
            ));
        }
        if let Some(d) = distances
            .iter()
            .find(|d| !(**d >= 0.0 && **d <= max + 1e-15))
        {
            return Err(Error::InvalidParameter(format!(
                "torus distance {d} outside [0, sqrt(2)/2]"
            )));
        }
        let degenerate = distances[0] == 0.0;
        Ok(DivergenceSeries {
            distances,
            degenerate,
        })
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn epsilon0(&self) -> f64 {
        self.distances[0]
    }

    /// Number of map steps recorded after `d_0`.
    pub fn steps(&self) -> usize {
        self.distances.len() - 1
    }

    /// Set when the initial point is exactly representable in `b` bits, so
    /// both trajectories coincide forever.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// First step with `d_t > threshold`.
    pub fn first_passage(&self, threshold: f64) -> Option<usize> {
        self.distances.iter().position(|d| *d > threshold)
    }
}

/// Steps the exact reference and its `b`-bit rounding side by side for
/// `steps` map iterations.
pub fn divergence_series(
    m: &CatMatrix,
    p0: &RationalPoint,
    bits: u32,
    steps: usize,
) -> Result<DivergenceSeries> {
    let mut exact = p0.clone();
    let mut fixed = FixedPointState::from_rational(p0, bits)?;
    if is_exactly_representable(p0, &fixed) {
        return Ok(DivergenceSeries {
            distances: vec![0.0; steps + 1],
            degenerate: true,
        });
    }
    let mut distances = Vec::with_capacity(steps + 1);
    distances.push(torus_distance_exact(&exact, &fixed));
    for _ in 0..steps {
        exact = exact.step(m);
        fixed = fixed.step(m);
        distances.push(torus_distance_exact(&exact, &fixed));
    }
    Ok(DivergenceSeries {
        distances,
        degenerate: false,
    })
}

/// Runs until `stop` holds for the latest distance or `cap` steps elapse.
fn divergence_until(
    m: &CatMatrix,
    p0: &RationalPoint,
    bits: u32,
    cap: usize,
    stop: impl Fn(f64) -> bool,
) -> Result<DivergenceSeries> {
    let mut exact = p0.clone();
    let mut fixed = FixedPointState::from_rational(p0, bits)?;
    if is_exactly_representable(p0, &fixed) {
        return Ok(DivergenceSeries {
            distances: vec![0.0],
            degenerate: true,
        });
    }
    let mut distances = vec![torus_distance_exact(&exact, &fixed)];
    while distances.len() <= cap && !stop(*distances.last().unwrap()) {
        exact = exact.step(m);
        fixed = fixed.step(m);
        distances.push(torus_distance_exact(&exact, &fixed));
    }
    Ok(DivergenceSeries {
        distances,
        degenerate: false,
    })
}

/// Window of the divergence series used by [`fit_lyapunov`]: points with
/// `lower_factor * eps0 < d_t < upper`, taken before the first saturation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    pub lower_factor: f64,
    pub upper: f64,
    pub min_points: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow {
            lower_factor: 10.0,
            upper: 0.01,
            min_points: 4,
        }
    }
}

/// Least-squares slope of `ln d_t` against `t` over the fit window.
pub fn fit_lyapunov(series: &DivergenceSeries, window: FitWindow) -> Result<f64> {
    let lower = window.lower_factor * series.epsilon0();
    let points: Vec<(f64, f64)> = series
        .distances
        .iter()
        .enumerate()
        .take_while(|(_, d)| **d < window.upper)
        .filter(|(_, d)| **d > lower)
        .map(|(t, d)| (t as f64, d.ln()))
        .collect();
    let needed = window.min_points.max(2);
    if series.is_degenerate() || points.len() < needed {
        return Err(Error::InsufficientData {
            found: if series.is_degenerate() {
                0
            } else {
                points.len()
            },
            needed,
        });
    }
    let k = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_l = points.iter().map(|p| p.1).sum::<f64>() / k;
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), (t, l)| {
        (
            num + (t - mean_t) * (l - mean_l),
            den + (t - mean_t) * (t - mean_t),
        )
    });
    Ok(num / den)
}

fn uniform_below(rng: &mut Stream, bound: &BigInt) -> BigInt {
    let bound = bound.to_u128().expect("bounds stay below 2^65");
    BigInt::from(rng.gen_range(0..bound))
}

/// Uniform random point with denominator `2^64 + 1`.
pub fn random_rational_point(rng: &mut Stream) -> RationalPoint {
    let q = reference_denominator();
    let px = uniform_below(rng, &q);
    let py = uniform_below(rng, &q);
    RationalPoint { px, py, q }
}

/// Uniform random point with denominator `2^64 + 1` inside lattice cell `cell`
/// (the square `[x/N, (x+1)/N) x [y/N, (y+1)/N)`).
pub fn random_rational_point_in_cell(rng: &mut Stream, cell: LatticePoint) -> RationalPoint {
    let q = reference_denominator();
    let n = BigInt::from(cell.size.get());
    let axis = |rng: &mut Stream, c: u64| {
        let ceil_div = |v: BigInt| -> BigInt { (v + &n - 1u32).div_floor(&n) };
        let lo = ceil_div(BigInt::from(c) * &q);
        let hi = ceil_div(BigInt::from(c + 1) * &q);
        &lo + uniform_below(rng, &(&hi - &lo))
    };
    let px = axis(rng, cell.x);
    let py = axis(rng, cell.y);
    RationalPoint { px, py, q }
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_LATTICE_BITS {
        return Err(Error::InvalidPrecision {
            bits,
            max: MAX_LATTICE_BITS,
        });
    }
    Ok(())
}

/// Generous cap on the steps needed for a `bits`-bit offset to reach
/// saturation: four times the expected first-passage time plus slack.
fn step_cap(m: &CatMatrix, bits: u32) -> usize {
    let expected = (bits as f64 + 2.0) * std::f64::consts::LN_2 / lyapunov_exponent(m);
    (4.0 * expected).ceil() as usize + 50
}

/// Draws a non-degenerate initial point for `trial`, resampling on exact
/// representability. Returns the point, its series and the resample count.
fn sample_trial<S>(
    seed: u64,
    trial: u64,
    bits: u32,
    sampler: &S,
    mut run: impl FnMut(&RationalPoint) -> Result<DivergenceSeries>,
) -> Result<(DivergenceSeries, u64)>
where
    S: Fn(&mut Stream) -> RationalPoint,
{
    const MAX_ATTEMPTS: u64 = 64;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream(seed, Purpose::InitialPoint, &[trial, attempt]);
        let p0 = sampler(&mut rng);
        let series = run(&p0)?;
        if !series.is_degenerate() {
            return Ok((series, attempt));
        }
    }
    Err(Error::InvalidParameter(format!(
        "trial {trial}: {MAX_ATTEMPTS} initial points in a row were exactly representable in {bits} bits"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BreakdownStats {
    pub mean: f64,
    /// First-passage step of each trial, in trial order.
    pub steps: Vec<usize>,
    /// Initial points redrawn because they were exactly representable.
    pub resampled: u64,
}

/// Mean first step at which a `bits`-bit trajectory is further than
/// `threshold` from the exact one, over `trials` uniform random points.
pub fn breakdown_time(
    m: &CatMatrix,
    bits: u32,
    threshold: f64,
    trials: usize,
    seed: u64,
) -> Result<BreakdownStats> {
    breakdown_time_sampled(m, bits, threshold, trials, seed, random_rational_point)
}

/// [`breakdown_time`] with a caller-supplied initial-point sampler.
pub fn breakdown_time_sampled<S>(
    m: &CatMatrix,
    bits: u32,
    threshold: f64,
    trials: usize,
    seed: u64,
    sampler: S,
) -> Result<BreakdownStats>
where
    S: Fn(&mut Stream) -> RationalPoint + Sync,
{
    check_bits(bits)?;
    if !(threshold > 0.0 && threshold <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be in (0, 0.5], got {threshold}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let cap = step_cap(m, bits);
    let per_trial: Vec<(usize, u64)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (series, resampled) = sample_trial(seed, trial, bits, &sampler, |p0| {
                divergence_until(m, p0, bits, cap, |d| d > threshold)
            })?;
            let t = series.first_passage(threshold).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "trial {trial}: distance stayed below {threshold} for {cap} steps"
                ))
            })?;
            Ok((t, resampled))
        })
        .collect::<Result<_>>()?;
    let steps: Vec<usize> = per_trial.iter().map(|p| p.0).collect();
    let mean = steps.iter().sum::<usize>() as f64 / trials as f64;
    Ok(BreakdownStats {
        mean,
        steps,
        resampled: per_trial.iter().map(|p| p.1).sum(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovEnsemble {
    pub mean: f64,
    /// Per-trial slopes of the trials that had enough points in the window.
    pub fits: Vec<f64>,
    /// Trials without enough pre-saturation data.
    pub skipped: usize,
}

/// Averages [`fit_lyapunov`] over `trials` uniform random initial points.
pub fn fit_lyapunov_ensemble(
    m: &CatMatrix,
    bits: u32,
    trials: usize,
    seed: u64,
    window: FitWindow,
) -> Result<LyapunovEnsemble> {
    check_bits(bits)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let cap = step_cap(m, bits);
    let fits: Vec<Option<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (series, _) = sample_trial(seed, trial, bits, &random_rational_point, |p0| {
                divergence_until(m, p0, bits, cap, |d| d >= window.upper)
            })?;
            match fit_lyapunov(&series, window) {
                Ok(slope) => Ok(Some(slope)),
                Err(Error::InsufficientData { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let fits: Vec<f64> = fits.into_iter().flatten().collect();
    let skipped = trials - fits.len();
    if fits.is_empty() {
        return Err(Error::InsufficientData {
            found: 0,
            needed: window.min_points,
        });
    }
    let mean = fits.iter().sum::<f64>() / fits.len() as f64;
    Ok(LyapunovEnsemble {
        mean,
        fits,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn third_point() -> RationalPoint {
        RationalPoint::new(1, 0, 3).unwrap()
    }

    #[test]
    fn rounding_offset_of_one_third() {
        let s = divergence_series(&CatMatrix::ARNOLD, &third_point(), 16, 3).unwrap();
        let expected = (1.0f64 / 3.0 - (65536.0f64 / 3.0).round() / 65536.0).abs();
        assert_abs_diff_eq!(s.epsilon0(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(s.epsilon0(), 5.1e-6, epsilon = 1e-7);
        assert!(!s.is_degenerate());
        assert_eq!(s.steps(), 3);
    }

    #[test]
    fn representable_point_is_degenerate() {
        let p = RationalPoint::new(1, 1, 4).unwrap();
        let s = divergence_series(&CatMatrix::ARNOLD, &p, 16, 10).unwrap();
        assert!(s.is_degenerate());
        assert!(s.distances().iter().all(|d| *d == 0.0));
        assert_eq!(s.steps(), 10);
    }

    /// Independent oracle: iterate the exact and rounded points as f64-free
    /// i128 numerators over the common denominator `q * 2^b`.
    fn oracle_first_passage(px: i128, py: i128, q: i128, bits: u32, threshold: f64) -> usize {
        let scale = 1i128 << bits;
        let round = |p: i128| ((2 * p * scale + q) / (2 * q)).rem_euclid(scale);
        let (mut ex, mut ey) = (px, py);
        let (mut fx, mut fy) = (round(px), round(py));
        let den = q * scale;
        for t in 0.. {
            let axis = |e: i128, f: i128| {
                let d = (e * scale - f * q).rem_euclid(den);
                d.min(den - d) as f64 / den as f64
            };
            if axis(ex, fx).hypot(axis(ey, fy)) > threshold {
                return t;
            }
            (ex, ey) = ((ex + ey).rem_euclid(q), (ex + 2 * ey).rem_euclid(q));
            (fx, fy) = ((fx + fy).rem_euclid(scale), (fx + 2 * fy).rem_euclid(scale));
        }
        unreachable!()
    }

    #[test]
    fn first_passage_for_thirds_and_sevenths() {
        // (1/3, 1/7) over the common denominator 21.
        let p = RationalPoint::new(7, 3, 21).unwrap();
        let oracle = oracle_first_passage(7, 3, 21, 16, 0.25);
        let s = divergence_series(&CatMatrix::ARNOLD, &p, 16, 40).unwrap();
        assert_eq!(s.first_passage(0.25), Some(oracle));
        assert!((9..=13).contains(&oracle), "t* = {oracle}");
    }

    #[test]
    fn rounded_trajectory_is_the_lattice_map() {
        let m = CatMatrix::ARNOLD;
        let mut rng = stream(5, Purpose::InitialPoint, &[0, 0]);
        let p = random_rational_point(&mut rng);
        let mut f = FixedPointState::from_rational(&p, 20).unwrap();
        let mut lp = f.lattice_point();
        for _ in 0..30 {
            f = f.step(&m);
            lp = crate::maps::discrete_step(&m, lp);
            assert_eq!(f.lattice_point(), lp);
        }
    }

    #[test]
    fn synthetic_exponential_fit_is_exact() {
        let eps = 1e-12;
        let d: Vec<f64> = (0..40)
            .map(|t| (eps * (0.9624 * t as f64).exp()).min(0.7))
            .collect();
        let s = DivergenceSeries::from_distances(d).unwrap();
        assert_abs_diff_eq!(
            fit_lyapunov(&s, FitWindow::default()).unwrap(),
            0.9624,
            epsilon = 1e-12
        );
    }

    #[test]
    fn saturated_series_cannot_be_fit() {
        let s = DivergenceSeries::from_distances(vec![0.02, 0.3, 0.4, 0.2, 0.5]).unwrap();
        assert!(matches!(
            fit_lyapunov(&s, FitWindow::default()),
            Err(Error::InsufficientData { found: 0, .. })
        ));
    }

    #[test]
    fn breakdown_rejects_bad_threshold() {
        let m = CatMatrix::ARNOLD;
        assert!(breakdown_time(&m, 16, 0.0, 10, 1).is_err());
        assert!(breakdown_time(&m, 16, 0.6, 10, 1).is_err());
        assert!(breakdown_time(&m, 16, 0.25, 0, 1).is_err());
        assert!(breakdown_time(&m, 0, 0.25, 1, 1).is_err());
    }

    #[test]
    fn breakdown_is_reproducible() {
        let m = CatMatrix::ARNOLD;
        let a = breakdown_time(&m, 16, 0.25, 32, 11).unwrap();
        let b = breakdown_time(&m, 16, 0.25, 32, 11).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 11.0).abs() <= 2.0, "mean = {}", a.mean);
    }

    #[test]
    fn cell_sampler_stays_in_cell() {
        let size = LatticeSize::new(8).unwrap();
        let cell = LatticePoint::new(3, 7, size).unwrap();
        for i in 0..50 {
            let p =
                random_rational_point_in_cell(&mut stream(1, Purpose::InitialPoint, &[i, 0]), cell);
            let x = p.px.to_f64().unwrap() / p.q.to_f64().unwrap();
            let y = p.py.to_f64().unwrap() / p.q.to_f64().unwrap();
            assert!((3.0 / 8.0..4.0 / 8.0).contains(&x), "x = {x}");
            assert!((7.0 / 8.0..1.0).contains(&y), "y = {y}");
        }
    }
}
