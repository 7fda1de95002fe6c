use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("not a permutation: {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("degree {degree} exceeds the enumeration bound {bound}")]
    BoundExceeded { degree: usize, bound: usize },
    #[error("a geodesic needs at least two points")]
    TooFewPoints,
    #[error("Weingarten table requires n >= p (got n = {n}, p = {p})")]
    UnsupportedRegime { n: u64, p: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("Jacobi sweeps did not converge (off-diagonal mass {0:e})")]
    NoConvergence(f64),
    #[error("spectrum is not normalized (sum {0})")]
    NotNormalized(f64),
    #[error("empty input")]
    Empty,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("integer overflow in exact summation")]
    Overflow,
}
