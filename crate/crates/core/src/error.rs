use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0:?} is not a lattice point")]
    NotALatticePoint(Vec<f64>),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid dilation: {0}")]
    InvalidDilation(String),

    #[error("invalid digit set: {0}")]
    InvalidDigitSet(String),

    #[error("{point:?} has no depth-{depth} digit expansion (final quotient {quotient:?})")]
    NotInTile {
        point: Vec<i64>,
        depth: usize,
        quotient: Vec<i64>,
    },

    #[error("dilation is not expansive: spectral radius of its inverse is {0}")]
    NotExpansive(f64),

    #[error("budget exceeded: {what} needs {needed} entries, cap is {cap}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error(
        "rank staircase for eigenvalue {eigenvalue} is ambiguous: nullities {at_tol:?} at tol, \
         {at_low:?} at 0.1x, {at_high:?} at 10x (algebraic multiplicity {multiplicity})"
    )]
    IllConditioned {
        eigenvalue: String,
        multiplicity: usize,
        at_tol: Vec<usize>,
        at_low: Vec<usize>,
        at_high: Vec<usize>,
    },

    #[error("index window is too small: {0}")]
    WindowTooSmall(String),

    #[error("eigenvalue is zero; kernel vectors cannot be extended")]
    ZeroEigenvalue,

    #[error("vector is not in the kernel: residual {residual:e} exceeds {tol:e}")]
    NotInKernel { residual: f64, tol: f64 },

    #[error("degenerate eigenvalue: {0}")]
    DegenerateEigenvalue(String),

    #[error("no evaluable test points at this resolution")]
    NoTestPoints,

    #[error("basis matrix is singular: condition number {0:e}")]
    SingularBasis(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
