//! Spectra, heat-kernel theta functions and zeta-regularized log-determinants
//! of connection Laplacians on tori.
//!
//! Two families of tori are covered:
//!
//! * real tori `R^n / A Z^n` with a flat orthogonal bundle of rank `d`, and
//! * discrete tori `Z^n / M Z^n` (the quotient graph of the grid `Z^n`) with a
//!   flat orthogonal connection.
//!
//! Every closed-form result has an independent numerical counterpart: the
//! discrete spectrum is checked against a dense eigensolve of the explicitly
//! assembled connection Laplacian, theta functions are evaluated both as
//! spectral sums and as dual (Gaussian or I-Bessel) lattice sums, and the
//! discrete log-determinant is reconstructed from heat-kernel quadratures.
//!
//! Linear algebra, multiset comparison and the dense spectra are generic over
//! the floating-point scalar ([`Real`]); lattice arithmetic is exact (`i64`
//! and [`Rational`]). Special functions, theta sums and quadrature-backed
//! determinants are `f64`.

pub mod bessel;
pub mod connection;
pub mod convergence;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod logdet;
pub mod quadrature;
pub mod spectrum;
pub mod theta;
pub mod torus;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

pub use error::{Error, Result};

/// Floating-point scalar accepted by the generic numerical kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Exact rational used for dual-lattice coset representatives.
pub type Rational = num_rational::Ratio<i64>;

/// Dense real matrix in double precision.
pub type Matrix = linalg::DenseMatrix<f64>;
/// Spectrum with double-precision eigenvalues.
pub type Spectrum = spectrum::SpectrumResult<f64>;
pub type SpectrumF32 = spectrum::SpectrumResult<f32>;
pub type LaplacianMatrix = spectrum::ConnectionLaplacianMatrix<f64>;

pub use connection::{EigenphaseTable, OffsetVectors, TorsionFamily};
pub use lattice::IntMatrix;
pub use torus::{DiscreteTorus, RealTorus};
