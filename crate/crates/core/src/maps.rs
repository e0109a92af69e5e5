//! Hyperbolic automorphisms of the 2-torus and their exact discretization.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported lattice exponent: `N = 2^62` keeps every product of two
/// reduced coordinates inside `u128`.
pub const MAX_LATTICE_BITS: u32 = 62;

/// Default cap for [`map_period_by_iteration`].
pub const DEFAULT_PERIOD_CAP: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::Parse(format!(
                "direction must be forward or backward, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// Integer matrix `((a, b), (c, d))` in SL(2, Z) with `|a + d| > 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct CatMatrix {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl CatMatrix {
    /// `(x, y) -> (x + y, x + 2y)`.
    pub const ARNOLD: CatMatrix = CatMatrix {
        a: 1,
        b: 1,
        c: 1,
        d: 2,
    };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::NotUnimodular { a, b, c, d, det });
        }
        let trace = a as i128 + d as i128;
        if trace.abs() <= 2 {
            return Err(Error::NotHyperbolic { a, b, c, d, trace });
        }
        Ok(CatMatrix { a, b, c, d })
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn trace(&self) -> i128 {
        self.a as i128 + self.d as i128
    }

    /// `((d, -b), (-c, a))`, which is again unimodular and hyperbolic.
    pub fn inverse(&self) -> CatMatrix {
        CatMatrix {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn oriented(&self, direction: Direction) -> CatMatrix {
        match direction {
            Direction::Forward => *self,
            Direction::Backward => self.inverse(),
        }
    }

    pub fn reduce(&self, modulus: u64) -> ModMatrix {
        let r = |v: i64| (v as i128).rem_euclid(modulus as i128) as u64;
        ModMatrix {
            m: [[r(self.a), r(self.b)], [r(self.c), r(self.d)]],
            modulus,
        }
    }
}

impl Default for CatMatrix {
    fn default() -> Self {
        CatMatrix::ARNOLD
    }
}

impl TryFrom<[i64; 4]> for CatMatrix {
    type Error = Error;

    fn try_from(v: [i64; 4]) -> Result<Self> {
        CatMatrix::new(v[0], v[1], v[2], v[3])
    }
}

impl From<CatMatrix> for [i64; 4] {
    fn from(m: CatMatrix) -> Self {
        m.entries()
    }
}

impl FromStr for CatMatrix {
    type Err = Error;

    /// Parses `a,b,c,d`.
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("matrix {s:?}: {e}")))?;
        let entries: [i64; 4] = parts
            .try_into()
            .map_err(|_| Error::Parse(format!("matrix {s:?}: expected four entries a,b,c,d")))?;
        CatMatrix::try_from(entries)
    }
}

impl fmt::Display for CatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

/// A 2x2 matrix with entries reduced modulo `modulus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModMatrix {
    pub m: [[u64; 2]; 2],
    pub modulus: u64,
}

impl ModMatrix {
    pub fn identity(modulus: u64) -> Self {
        let one = u64::from(modulus > 1);
        ModMatrix {
            m: [[one, 0], [0, one]],
            modulus,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == ModMatrix::identity(self.modulus)
    }

    pub fn mul(&self, rhs: &ModMatrix) -> ModMatrix {
        debug_assert_eq!(self.modulus, rhs.modulus);
        let n = self.modulus as u128;
        let e = |i: usize, j: usize| {
            let s = self.m[i][0] as u128 * rhs.m[0][j] as u128
                + self.m[i][1] as u128 * rhs.m[1][j] as u128;
            (s % n) as u64
        };
        ModMatrix {
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
            modulus: self.modulus,
        }
    }

    pub fn pow(&self, mut t: u64) -> ModMatrix {
        let mut base = *self;
        let mut acc = ModMatrix::identity(self.modulus);
        while t > 0 {
            if t & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            t >>= 1;
        }
        acc
    }

    /// Applies the matrix to a column vector `(x, y)` whose entries are
    /// already reduced.
    #[inline]
    pub fn apply(&self, x: u64, y: u64) -> (u64, u64) {
        let n = self.modulus as u128;
        let (x, y) = (x as u128, y as u128);
        let nx = (self.m[0][0] as u128 * x + self.m[0][1] as u128 * y) % n;
        let ny = (self.m[1][0] as u128 * x + self.m[1][1] as u128 * y) % n;
        (nx as u64, ny as u64)
    }
}

/// Side length `N = 2^n` of the square lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct LatticeSize(u64);

impl LatticeSize {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() || n.trailing_zeros() > MAX_LATTICE_BITS {
            return Err(Error::NotPowerOfTwo(n));
        }
        Ok(LatticeSize(n))
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_LATTICE_BITS {
            return Err(Error::InvalidPrecision {
                bits,
                max: MAX_LATTICE_BITS,
            });
        }
        Ok(LatticeSize(1 << bits))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// `n` with `N = 2^n`; also the qubit count per axis.
    pub fn bits(self) -> u32 {
        self.0.trailing_zeros()
    }

    /// Number of cells `N^2` as a `usize`, for dense storage.
    pub fn cells(self) -> Result<usize> {
        usize::try_from(self.0)
            .ok()
            .and_then(|n| n.checked_mul(n))
            .ok_or_else(|| {
                Error::InvalidParameter(format!("{}^2 cells do not fit in memory", self.0))
            })
    }
}

impl TryFrom<u64> for LatticeSize {
    type Error = Error;

    fn try_from(n: u64) -> Result<Self> {
        LatticeSize::new(n)
    }
}

impl From<LatticeSize> for u64 {
    fn from(s: LatticeSize) -> u64 {
        s.0
    }
}

impl FromStr for LatticeSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n: u64 = s
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("N {s:?}: {e}")))?;
        LatticeSize::new(n)
    }
}

impl fmt::Display for LatticeSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: u64,
    pub y: u64,
    pub size: LatticeSize,
}

impl LatticePoint {
    pub fn new(x: u64, y: u64, size: LatticeSize) -> Result<Self> {
        if x >= size.get() || y >= size.get() {
            return Err(Error::OutOfLattice {
                x,
                y,
                size: size.get(),
            });
        }
        Ok(LatticePoint { x, y, size })
    }

    /// Flat cell index `x * N + y`.
    pub fn index(&self) -> usize {
        (self.x * self.size.get() + self.y) as usize
    }

    pub fn from_index(index: usize, size: LatticeSize) -> Self {
        let n = size.get();
        let i = index as u64;
        LatticePoint {
            x: i / n,
            y: i % n,
            size,
        }
    }

    /// Wrap-around Euclidean distance in torus units.
    pub fn torus_distance(&self, other: &LatticePoint) -> f64 {
        let n = self.size.get();
        let axis = |u: u64, v: u64| {
            let d = u.abs_diff(v);
            d.min(n - d) as f64 / n as f64
        };
        axis(self.x, other.x).hypot(axis(self.y, other.y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !((0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)) {
            return Err(Error::OutOfTorus(x, y));
        }
        Ok(TorusPoint { x, y })
    }

    pub fn torus_distance(&self, other: &TorusPoint) -> f64 {
        let axis = |u: f64, v: f64| {
            let d = (u - v).abs();
            d.min(1.0 - d)
        };
        axis(self.x, other.x).hypot(axis(self.y, other.y))
    }
}

/// Exact point `(px / q, py / q)` on the torus.
///
/// The denominator never changes under an integer matrix, so iteration stays
/// in the fixed ring `Z_q` without any denominator growth.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    pub px: BigInt,
    pub py: BigInt,
    pub q: BigInt,
}

impl RationalPoint {
    pub fn new(px: impl Into<BigInt>, py: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self> {
        let (px, py, q) = (px.into(), py.into(), q.into());
        if !q.is_positive() {
            return Err(Error::InvalidRational(format!(
                "denominator {q} must be positive"
            )));
        }
        if px.is_negative() || py.is_negative() || px >= q || py >= q {
            return Err(Error::InvalidRational(format!(
                "numerators ({px}, {py}) must lie in [0, {q})"
            )));
        }
        Ok(RationalPoint { px, py, q })
    }

    /// Exact image under the continuous map, keeping the denominator.
    pub fn step(&self, m: &CatMatrix) -> RationalPoint {
        let [a, b, c, d] = m.entries();
        let nx = (BigInt::from(a) * &self.px + BigInt::from(b) * &self.py).mod_floor(&self.q);
        let ny = (BigInt::from(c) * &self.px + BigInt::from(d) * &self.py).mod_floor(&self.q);
        RationalPoint {
            px: nx,
            py: ny,
            q: self.q.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.px.is_zero() && self.py.is_zero()
    }
}

impl FromStr for RationalPoint {
    type Err = Error;

    /// Parses `px,py,q`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<BigInt> = s
            .split(',')
            .map(|p| p.trim().parse::<BigInt>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("point {s:?}: {e}")))?;
        match <[BigInt; 3]>::try_from(parts) {
            Ok([px, py, q]) => RationalPoint::new(px, py, q),
            Err(_) => Err(Error::Parse(format!("point {s:?}: expected px,py,q"))),
        }
    }
}

/// `(a x + b y mod 1, c x + d y mod 1)` in floating point.
pub fn continuous_step(m: &CatMatrix, p: TorusPoint) -> TorusPoint {
    let [a, b, c, d] = m.entries();
    let wrap = |v: f64| {
        let r = v.rem_euclid(1.0);
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    };
    TorusPoint {
        x: wrap(a as f64 * p.x + b as f64 * p.y),
        y: wrap(c as f64 * p.x + d as f64 * p.y),
    }
}

pub fn discrete_step(m: &CatMatrix, p: LatticePoint) -> LatticePoint {
    let (x, y) = m.reduce(p.size.get()).apply(p.x, p.y);
    LatticePoint { x, y, size: p.size }
}

pub fn discrete_inverse_step(m: &CatMatrix, p: LatticePoint) -> LatticePoint {
    discrete_step(&m.inverse(), p)
}

/// `m^t` with entries reduced modulo `modulus` (`m^0` is the identity).
pub fn matrix_pow_mod(m: &CatMatrix, t: u64, modulus: u64) -> ModMatrix {
    m.reduce(modulus).pow(t)
}

/// Smallest `t >= 1` with `m^t = I (mod N)`.
///
/// Uses the group structure of `SL(2, Z/2^k)`: the order modulo 2 divides 6,
/// and `m^r` for that order `r` lies in the kernel of reduction mod 2, which
/// is a 2-group, so its order is found by repeated squaring.
pub fn map_period(m: &CatMatrix, size: LatticeSize) -> Result<u64> {
    let base = m.reduce(2);
    let mut r = 1u64;
    let mut acc = base;
    while !acc.is_identity() {
        acc = acc.mul(&base);
        r += 1;
        debug_assert!(r <= 6, "|SL(2, Z/2)| = 6");
    }
    let mut kernel = m.reduce(size.get()).pow(r);
    let mut period = r;
    while !kernel.is_identity() {
        kernel = kernel.mul(&kernel);
        period = period
            .checked_mul(2)
            .ok_or_else(|| Error::InvalidParameter(format!("period modulo {size} exceeds u64")))?;
    }
    Ok(period)
}

/// Smallest `t >= 1` with `m^t = I (mod modulus)` by direct iteration, for
/// any modulus `>= 2`. Fails once `cap` steps have been tried.
pub fn map_period_by_iteration(m: &CatMatrix, modulus: u64, cap: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::InvalidParameter(format!(
            "modulus must be >= 2, got {modulus}"
        )));
    }
    let base = m.reduce(modulus);
    let mut acc = base;
    for t in 1..=cap {
        if acc.is_identity() {
            return Ok(t);
        }
        acc = acc.mul(&base);
    }
    Err(Error::PeriodCapExceeded(cap))
}

/// Log of the largest eigenvalue magnitude, `ln((|tr| + sqrt(tr^2 - 4)) / 2)`.
pub fn lyapunov_exponent(m: &CatMatrix) -> f64 {
    let tr = m.trace().unsigned_abs() as f64;
    ((tr + (tr * tr - 4.0).sqrt()) / 2.0).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lp(x: u64, y: u64, n: u64) -> LatticePoint {
        LatticePoint::new(x, y, LatticeSize::new(n).unwrap()).unwrap()
    }

    /// Brute-force oracle: repeated naive multiplication in i128.
    fn naive_pow(m: &CatMatrix, t: u64, modulus: i128) -> [[i128; 2]; 2] {
        let [a, b, c, d] = m.entries().map(|v| v as i128);
        let mut acc = [[1, 0], [0, 1]];
        for _ in 0..t {
            acc = [
                [
                    (acc[0][0] * a + acc[0][1] * c).rem_euclid(modulus),
                    (acc[0][0] * b + acc[0][1] * d).rem_euclid(modulus),
                ],
                [
                    (acc[1][0] * a + acc[1][1] * c).rem_euclid(modulus),
                    (acc[1][0] * b + acc[1][1] * d).rem_euclid(modulus),
                ],
            ];
        }
        acc.map(|row| row.map(|v| v.rem_euclid(modulus)))
    }

    fn naive_period(m: &CatMatrix, modulus: i128) -> u64 {
        let one = [[1, 0], [0, 1]];
        (1..).find(|&t| naive_pow(m, t, modulus) == one).unwrap()
    }

    #[test]
    fn matrix_validation() {
        assert!(CatMatrix::new(1, 1, 1, 2).is_ok());
        assert!(matches!(
            CatMatrix::new(1, 0, 0, 1),
            Err(Error::NotHyperbolic { .. })
        ));
        assert!(matches!(
            CatMatrix::new(2, 1, 1, 2),
            Err(Error::NotUnimodular { .. })
        ));
        assert!(matches!(
            CatMatrix::new(1, 1, 0, 1),
            Err(Error::NotHyperbolic { .. })
        ));
        assert!(CatMatrix::new(-1, 1, 1, -2).is_ok());
        assert_eq!("1,1,1,2".parse::<CatMatrix>().unwrap(), CatMatrix::ARNOLD);
        assert!("1,1,1".parse::<CatMatrix>().is_err());
        assert!("1,x,1,2".parse::<CatMatrix>().is_err());
    }

    #[test]
    fn lattice_size_validation() {
        assert!(LatticeSize::new(100).is_err());
        assert!(LatticeSize::new(1).is_err());
        assert!(LatticeSize::new(0).is_err());
        assert_eq!(LatticeSize::new(64).unwrap().bits(), 6);
        assert!(LatticePoint::new(8, 0, LatticeSize::new(8).unwrap()).is_err());
    }

    #[test]
    fn continuous_step_examples() {
        let m = CatMatrix::ARNOLD;
        let s = |x, y| continuous_step(&m, TorusPoint::new(x, y).unwrap());
        assert_eq!(s(0.0, 0.0), TorusPoint { x: 0.0, y: 0.0 });
        assert_eq!(s(0.5, 0.0), TorusPoint { x: 0.5, y: 0.5 });
        assert_eq!(s(0.25, 0.5), TorusPoint { x: 0.75, y: 0.25 });
    }

    #[test]
    fn discrete_step_examples() {
        let m = CatMatrix::ARNOLD;
        assert_eq!(discrete_step(&m, lp(0, 0, 8)), lp(0, 0, 8));
        assert_eq!(discrete_step(&m, lp(1, 0, 8)), lp(1, 1, 8));
        assert_eq!(discrete_step(&m, lp(3, 5, 8)), lp(0, 5, 8));
        assert_eq!(discrete_inverse_step(&m, lp(1, 1, 8)), lp(1, 0, 8));
        assert_eq!(discrete_inverse_step(&m, lp(0, 0, 8)), lp(0, 0, 8));
        assert_eq!(discrete_inverse_step(&m, lp(0, 5, 8)), lp(3, 5, 8));
    }

    #[test]
    fn matrix_pow_examples() {
        let m = CatMatrix::ARNOLD;
        assert_eq!(matrix_pow_mod(&m, 0, 8).m, [[1, 0], [0, 1]]);
        assert_eq!(matrix_pow_mod(&m, 1, 8).m, [[1, 1], [1, 2]]);
        assert_eq!(naive_pow(&m, 3, 2), [[1, 0], [0, 1]]);
        assert_eq!(matrix_pow_mod(&m, 3, 2).m, [[1, 0], [0, 1]]);
        for t in 0..50 {
            let fast = matrix_pow_mod(&m, t, 1 << 20)
                .m
                .map(|r| r.map(|v| v as i128));
            assert_eq!(fast, naive_pow(&m, t, 1 << 20), "t={t}");
        }
    }

    #[test]
    fn period_examples() {
        let m = CatMatrix::ARNOLD;
        assert_eq!(naive_period(&m, 2), 3);
        assert_eq!(map_period(&m, LatticeSize::new(2).unwrap()).unwrap(), 3);
        // Frozen from the brute-force oracle.
        assert_eq!(naive_period(&m, 4), 3);
        assert_eq!(map_period(&m, LatticeSize::new(4).unwrap()).unwrap(), 3);
    }

    #[test]
    fn period_routes_agree_with_brute_force() {
        let matrices = [
            CatMatrix::ARNOLD,
            CatMatrix::new(2, 1, 1, 1).unwrap(),
            CatMatrix::new(1, 2, 1, 3).unwrap(),
            CatMatrix::new(3, 2, 4, 3).unwrap(),
            CatMatrix::new(-1, 1, 1, -2).unwrap(),
        ];
        for m in &matrices {
            for k in 1..=10u32 {
                let n = 1u64 << k;
                let brute = naive_period(m, n as i128);
                let grouped = map_period(m, LatticeSize::new(n).unwrap()).unwrap();
                let iterated = map_period_by_iteration(m, n, DEFAULT_PERIOD_CAP).unwrap();
                assert_eq!(grouped, brute, "{m} N={n}");
                assert_eq!(iterated, brute, "{m} N={n}");
            }
        }
    }

    #[test]
    fn period_cap_is_enforced() {
        let err = map_period_by_iteration(&CatMatrix::ARNOLD, 1 << 20, 10).unwrap_err();
        assert!(matches!(err, Error::PeriodCapExceeded(10)));
        // Large lattices stay fast on the group-order route.
        let p = map_period(&CatMatrix::ARNOLD, LatticeSize::new(1 << 40).unwrap()).unwrap();
        assert!(matrix_pow_mod(&CatMatrix::ARNOLD, p, 1 << 40).is_identity());
        assert!(!matrix_pow_mod(&CatMatrix::ARNOLD, p / 2, 1 << 40).is_identity());
    }

    #[test]
    fn lyapunov_examples() {
        let ln_golden_sq = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert_abs_diff_eq!(
            lyapunov_exponent(&CatMatrix::ARNOLD),
            ln_golden_sq,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            lyapunov_exponent(&CatMatrix::ARNOLD),
            0.962424,
            epsilon = 1e-6
        );
        let conj = CatMatrix::new(2, 1, 1, 1).unwrap();
        assert_abs_diff_eq!(lyapunov_exponent(&conj), 0.962424, epsilon = 1e-6);
        let trace4 = CatMatrix::new(1, 2, 1, 3).unwrap();
        assert_abs_diff_eq!(
            lyapunov_exponent(&trace4),
            (2.0 + 3f64.sqrt()).ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(lyapunov_exponent(&trace4), 1.31696, epsilon = 1e-5);
    }

    #[test]
    fn rational_step_uses_fixed_denominator() {
        let p = RationalPoint::new(1, 0, 3).unwrap();
        let s = p.step(&CatMatrix::ARNOLD);
        assert_eq!(s, RationalPoint::new(1, 1, 3).unwrap());
        let n = CatMatrix::new(-1, 1, 1, -2).unwrap();
        let s = RationalPoint::new(1, 0, 3).unwrap().step(&n);
        assert_eq!(s, RationalPoint::new(2, 1, 3).unwrap());
        assert!(RationalPoint::new(3, 0, 3).is_err());
        assert!("1,2".parse::<RationalPoint>().is_err());
    }
}
