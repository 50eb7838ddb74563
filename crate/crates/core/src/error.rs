use thiserror::Error;

/// Errors raised by the numerical and lattice routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integer overflow in exact lattice arithmetic")]
    Overflow,
    #[error("lattice enumeration would produce more than {cap} points (radius {radius})")]
    RadiusTooLarge { radius: f64, cap: usize },
    #[error("torsion matrix {index} is not orthogonal (residual {residual:.3e})")]
    NotOrthogonal { index: usize, residual: f64 },
    #[error("torsion matrices {first} and {second} do not commute (residual {residual:.3e})")]
    NotCommuting {
        first: usize,
        second: usize,
        residual: f64,
    },
    #[error("phase {value} at ({row}, {col}) is outside (-pi, pi]")]
    PhaseOutOfRange { row: usize, col: usize, value: f64 },
    #[error("joint diagonalization failed after {attempts} attempts (residual {residual:.3e})")]
    DiagonalizationFailed { attempts: usize, residual: f64 },
    #[error("explicit Laplacian of size {size} exceeds the oracle cap {cap}")]
    OracleTooLarge { size: usize, cap: usize },
    #[error("eigensolver did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("multisets have different cardinalities ({left} vs {right})")]
    CardinalityMismatch { left: usize, right: usize },
    #[error("truncation tail could not be certified below {eps:.3e}")]
    TailNotCertified { eps: f64 },
    #[error("fiber {0} has vanishing offset; use the degenerate variant")]
    DegenerateTorsion(usize),
    #[error(
        "quadrature did not converge (estimated error {error:.3e}, tolerance {tolerance:.3e})"
    )]
    QuadratureNotConverged { error: f64, tolerance: f64 },
    #[error("independent evaluations of {quantity} disagree: {left} vs {right}")]
    CrossCheckFailed {
        quantity: String,
        left: f64,
        right: f64,
    },
}

impl Error {
    /// Whether the error stems from user-supplied data rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix
                | Error::InvalidInput(_)
                | Error::Overflow
                | Error::NotOrthogonal { .. }
                | Error::NotCommuting { .. }
                | Error::PhaseOutOfRange { .. }
                | Error::OracleTooLarge { .. }
                | Error::RadiusTooLarge { .. }
                | Error::CardinalityMismatch { .. }
                | Error::DegenerateTorsion(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
