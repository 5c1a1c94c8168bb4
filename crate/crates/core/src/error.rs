use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the core can report.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed expression source; `offset` is a byte offset into the input.
    Syntax { offset: usize, message: &'static str },
    UnknownIdentifier { name: String, offset: usize },
    NonFinite { what: &'static str },
    SingularMetric { node: Vec<f64> },
    NotSymmetric { row: usize, col: usize },
    DimensionMismatch { expected: usize, found: usize },
    InvalidManifold(&'static str),
    InvalidParameter(&'static str),
    /// The function does not vanish on the boundary, or its differential does.
    NotABdf { node: Vec<f64>, value: f64, gradient_norm: f64 },
    NotPositiveDefinite { node: Vec<f64>, min_eigenvalue: f64 },
    DegeneratePlane { gram: f64 },
    TooCloseToBoundary { r: f64, r_min: f64 },
    FlowExitsChart { start: Vec<f64>, time: f64 },
    VanishingK2 { start: Vec<f64>, time: f64 },
    OrthogonalityViolation { defect: f64, tol: f64 },
    /// `|r(flow(t)) - t|` exceeded its tolerance.
    FlowDefect { defect: f64, tol: f64 },
    /// `kappa_inf >= -1` somewhere on the boundary (after rescaling).
    HypothesisViolation { node: Vec<f64>, k2: f64 },
    QuadratureFailed { a: f64, b: f64 },
    ConsistencyFailure { max_rel: f64, tol: f64 },
    NotRepresentable { r: f64, deficit: f64 },
    GridMismatch { expected: usize, found: usize },
    FrameMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Syntax { offset, message } => write!(f, "syntax error at offset {offset}: {message}"),
            Error::UnknownIdentifier { name, offset } => {
                write!(f, "unknown identifier `{name}` at offset {offset}")
            }
            Error::NonFinite { what } => write!(f, "non-finite value while evaluating {what}"),
            Error::SingularMetric { node } => write!(f, "singular metric at {node:?}"),
            Error::NotSymmetric { row, col } => {
                write!(f, "metric components ({row},{col}) and ({col},{row}) differ")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidManifold(msg) => write!(f, "invalid manifold: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NotABdf { node, value, gradient_norm } => write!(
                f,
                "not a boundary defining function at {node:?} (value {value:e}, |d| {gradient_norm:e})"
            ),
            Error::NotPositiveDefinite { node, min_eigenvalue } => write!(
                f,
                "tensor not positive-definite at {node:?} (min eigenvalue {min_eigenvalue:e})"
            ),
            Error::DegeneratePlane { gram } => write!(f, "degenerate two-plane (gram {gram:e})"),
            Error::TooCloseToBoundary { r, r_min } => {
                write!(f, "base point at r = {r:e} is below r_min = {r_min:e}")
            }
            Error::FlowExitsChart { start, time } => {
                write!(f, "flow exits chart: trajectory from {start:?} at time {time}")
            }
            Error::VanishingK2 { start, time } => {
                write!(f, "K^2 reaches 0 on trajectory from {start:?} at time {time}")
            }
            Error::OrthogonalityViolation { defect, tol } => {
                write!(f, "collar level sets not orthogonal: defect {defect:e} > {tol:e}")
            }
            Error::FlowDefect { defect, tol } => {
                write!(f, "flow time and level of r disagree by {defect:e} > {tol:e}")
            }
            Error::HypothesisViolation { node, k2 } => write!(
                f,
                "hypothesis violation: kappa_inf = {:.12} <= -1 at boundary node {node:?}",
                -k2
            ),
            Error::QuadratureFailed { a, b } => write!(f, "quadrature did not converge on [{a}, {b}]"),
            Error::ConsistencyFailure { max_rel, tol } => {
                write!(f, "internal consistency failure: {max_rel:e} > {tol:e}")
            }
            Error::NotRepresentable { r, deficit } => write!(
                f,
                "metric not representable as a surface of revolution at r = {r} (A^2 - B'^2 = {deficit:e})"
            ),
            Error::GridMismatch { expected, found } => {
                write!(f, "grid mismatch: expected {expected} nodes, found {found}")
            }
            Error::FrameMismatch => f.write_str("tensor fields expressed in different frames"),
        }
    }
}

impl core::error::Error for Error {}
