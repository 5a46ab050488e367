use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frame is not lagrangian: {0}")]
    NotLagrangian(String),
    #[error("subspaces are not transversal (intersection dimension {0})")]
    NotTransversal(usize),
    #[error("transition undefined: I + A B is numerically singular")]
    SingularTransition,
    #[error("no common transversal found after {0} candidates")]
    SearchFailed(usize),
    #[error("open path endpoint lies on the Maslov cycle (stratum {0})")]
    EndpointOnCycle(usize),
    #[error("crossing could not be resolved near t = {0}")]
    UnresolvedCrossing(f64),
    #[error("phase lift failed between samples {0} and {1}")]
    LiftFailure(usize, usize),
    #[error("point lies in a stratum with empty intersection")]
    EmptyIntersection,
    #[error("(A, v) is not fibre-critical")]
    NotCritical,
    #[error("finite-difference tangent basis is rank deficient (rank {rank}, expected {expected})")]
    DegenerateBasis { rank: usize, expected: usize },
    #[error("symmetric form is singular (nullity {0})")]
    SingularForm(usize),
    #[error("extrapolation did not converge: estimate {estimate:e} exceeds tolerance {tol:e}")]
    NonConvergent { estimate: f64, tol: f64 },
    #[error("unsupported dimension n = {n} (maximum {max})")]
    UnsupportedDim { n: usize, max: usize },
    #[error("fewer than 8 usable points in the fit window ({0})")]
    BadWindow(usize),
    #[error("wrong spinor representation for this operation")]
    WrongRepresentation,
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
