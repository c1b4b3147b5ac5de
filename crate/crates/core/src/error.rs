use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An index such as the degree `k` of `S_k` fell outside `0..=n`.
    DegreeOutOfRange { k: usize, n: usize },
    /// Dimension outside the supported range or mismatched operands.
    Dimension(String),
    /// Input matrix deviates from Hermitian symmetry beyond tolerance.
    NotHermitian { deviation: f64 },
    /// The metric pencil is not positive definite.
    SingularMetric { min_eigenvalue: f64, point: Option<usize> },
    /// An eigenvalue tuple lies outside the required cone.
    OutsideCone { worst_margin: f64, point: Option<usize> },
    /// A generic domain violation (negative `S_m`, non-finite entries, ...).
    Domain(String),
    /// Inconsistent configuration (nonpositive integrals, bad schedules, ...).
    Config(String),
    /// Newton iteration failed to reach the requested tolerance.
    NonConvergence { iterations: usize, residual: f64, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegreeOutOfRange { k, n } => {
                write!(f, "degree {k} out of range 0..={n}")
            }
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::NotHermitian { deviation } => {
                write!(f, "matrix is not Hermitian (relative deviation {deviation:e})")
            }
            Error::SingularMetric { min_eigenvalue, point } => match point {
                Some(p) => write!(
                    f,
                    "metric not positive definite at grid point {p} (smallest eigenvalue {min_eigenvalue:e})"
                ),
                None => write!(
                    f,
                    "metric not positive definite (smallest eigenvalue {min_eigenvalue:e})"
                ),
            },
            Error::OutsideCone { worst_margin, point } => match point {
                Some(p) => write!(
                    f,
                    "eigenvalues leave the admissible cone at grid point {p} (worst margin {worst_margin:e})"
                ),
                None => write!(
                    f,
                    "eigenvalues outside the admissible cone (worst margin {worst_margin:e})"
                ),
            },
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::NonConvergence { iterations, residual, reason } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e}): {reason}"
            ),
        }
    }
}

impl core::error::Error for Error {}
