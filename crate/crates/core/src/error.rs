use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix ({a},{b},{c},{d}) has determinant {det}, expected 1")]
    NotUnimodular {
        a: i64,
        b: i64,
        c: i64,
        d: i64,
        det: i128,
    },
    #[error("matrix ({a},{b},{c},{d}) is not hyperbolic: |trace| = {trace} must exceed 2")]
    NotHyperbolic {
        a: i64,
        b: i64,
        c: i64,
        d: i64,
        trace: i128,
    },
    #[error("N must be a power of two >= 2, got {0}")]
    NotPowerOfTwo(u64),
    #[error("point ({x},{y}) outside the {size}x{size} lattice")]
    OutOfLattice { x: u64, y: u64, size: u64 },
    #[error("invalid torus coordinate ({0},{1}), both must lie in [0,1)")]
    OutOfTorus(f64, f64),
    #[error("invalid rational point: {0}")]
    InvalidRational(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid state vector: {0}")]
    InvalidState(String),
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },
    #[error("precision must be between 1 and {max} bits, got {bits}")]
    InvalidPrecision { bits: u32, max: u32 },
    #[error("period search exceeded the cap of {0} steps")]
    PeriodCapExceeded(u64),
    #[error("insufficient pre-saturation data: {found} points in the fit window, need {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{arm}: {source}")]
    Arm {
        arm: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_arm(arm: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Arm {
            arm,
            source: Box::new(source),
        }
    }
}
