//! Validated tori with cached eigenphases, offsets and dual coset data.

use std::f64::consts::PI;

use num_traits::ToPrimitive;

use crate::connection::{offsets, EigenphaseTable, OffsetVectors, TorsionFamily, DEFAULT_SEED};
use crate::lattice::{dual_coset_reps, IntMatrix, DEFAULT_MAX_VERTICES};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

fn check_torsion_shape(torsion: &TorsionFamily, n: usize) -> Result<()> {
    if torsion.n() != n {
        return Err(Error::InvalidInput(format!(
            "torsion has {} generators but the torus has dimension {n}",
            torsion.n()
        )));
    }
    Ok(())
}

/// Centers `x` into `[-1/2, 1/2)` modulo 1.
pub fn center_mod1(x: f64) -> f64 {
    let y = x - x.round();
    if y >= 0.5 {
        y - 1.0
    } else {
        y
    }
}

/// `4 Σ_k sin²(π w_k)`, evaluated on the centered representative.
pub fn discrete_eigenvalue(w: &[f64]) -> f64 {
    4.0 * w
        .iter()
        .map(|&x| {
            let s = (PI * center_mod1(x)).sin();
            s * s
        })
        .sum::<f64>()
}

/// The discrete torus `Z^n / M Z^n` carrying a flat orthogonal bundle.
#[derive(Debug, Clone)]
pub struct DiscreteTorus {
    m: IntMatrix,
    torsion: TorsionFamily,
    phases: EigenphaseTable,
    offsets: OffsetVectors,
    /// Dual coset representatives centered into `[-1/2, 1/2)^n`.
    dual_reps: Vec<Vec<f64>>,
}

impl DiscreteTorus {
    pub fn new(m: IntMatrix, torsion: TorsionFamily) -> Result<Self> {
        Self::with_seed(m, torsion, DEFAULT_SEED)
    }

    pub fn with_seed(m: IntMatrix, torsion: TorsionFamily, seed: u64) -> Result<Self> {
        check_torsion_shape(&torsion, m.dim())?;
        let count = m.index()?;
        if count > DEFAULT_MAX_VERTICES {
            return Err(Error::InvalidInput(format!(
                "torus has {count} vertices, above the cap {DEFAULT_MAX_VERTICES}"
            )));
        }
        let torsion = torsion.validate()?;
        let phases = torsion.eigenphases(seed)?;
        let offsets = offsets(&phases, &m.to_f64())?;
        let dual_reps = dual_coset_reps(&m)?
            .into_iter()
            .map(|w| {
                w.into_iter()
                    .map(|x| center_mod1(x.to_f64().expect("finite rational")))
                    .collect()
            })
            .collect();
        Ok(Self {
            m,
            torsion,
            phases,
            offsets,
            dual_reps,
        })
    }

    /// Trivial bundle of rank `d`.
    pub fn trivial(m: IntMatrix, d: usize) -> Result<Self> {
        let n = m.dim();
        Self::new(m, TorsionFamily::trivial(n, d))
    }

    pub fn n(&self) -> usize {
        self.m.dim()
    }

    pub fn d(&self) -> usize {
        self.torsion.d()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.m
    }

    pub fn torsion(&self) -> &TorsionFamily {
        &self.torsion
    }

    pub fn phases(&self) -> &EigenphaseTable {
        &self.phases
    }

    pub fn offsets(&self) -> &OffsetVectors {
        &self.offsets
    }

    /// Number of vertices `N = |det M|`.
    pub fn vertices(&self) -> usize {
        self.dual_reps.len()
    }

    /// Volume `μ(DT) = |det M|`.
    pub fn volume(&self) -> f64 {
        self.vertices() as f64
    }

    pub fn dual_reps(&self) -> &[Vec<f64>] {
        &self.dual_reps
    }

    /// The points `w = w_0 + w̄_j`, centered modulo `Z^n`, in dual-rep order.
    pub fn fiber_points(&self, j: usize) -> Vec<Vec<f64>> {
        let wbar = &self.offsets.wbar[j];
        self.dual_reps
            .iter()
            .map(|w0| {
                w0.iter()
                    .zip(wbar)
                    .map(|(a, b)| center_mod1(a + b))
                    .collect()
            })
            .collect()
    }

    /// Eigenvalues of fiber `j`, in dual-rep order (the first is `λ(w̄_j)`).
    pub fn fiber_eigenvalues(&self, j: usize) -> Vec<f64> {
        self.fiber_points(j)
            .iter()
            .map(|w| discrete_eigenvalue(w))
            .collect()
    }

    /// Shortest column length of `M`, a proxy for the injectivity scale.
    pub fn shortest_period(&self) -> f64 {
        let a = self.m.to_f64();
        (0..self.n())
            .map(|j| a.col_norm(j))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The real torus `R^n / A Z^n` carrying a flat orthogonal bundle.
#[derive(Debug, Clone)]
pub struct RealTorus {
    a: DenseMatrix<f64>,
    torsion: TorsionFamily,
    phases: EigenphaseTable,
    offsets: OffsetVectors,
    /// Basis `(A^T)^{-1}` of the dual lattice.
    dual_basis: DenseMatrix<f64>,
    volume: f64,
}

impl RealTorus {
    pub fn new(a: DenseMatrix<f64>, torsion: TorsionFamily) -> Result<Self> {
        Self::with_seed(a, torsion, DEFAULT_SEED)
    }

    pub fn with_seed(a: DenseMatrix<f64>, torsion: TorsionFamily, seed: u64) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 || a.rows() > crate::lattice::MAX_DIM {
            return Err(Error::InvalidInput(
                "period matrix must be square of dimension 1..=4".into(),
            ));
        }
        if a.max_abs().is_nan() || !a.max_abs().is_finite() {
            return Err(Error::InvalidInput("period matrix must be finite".into()));
        }
        check_torsion_shape(&torsion, a.rows())?;
        let volume = a.determinant()?.abs();
        if volume == 0.0 {
            return Err(Error::SingularMatrix);
        }
        let dual_basis = a.transpose().inverse()?;
        let torsion = torsion.validate()?;
        let phases = torsion.eigenphases(seed)?;
        let offsets = offsets(&phases, &a)?;
        Ok(Self {
            a,
            torsion,
            phases,
            offsets,
            dual_basis,
            volume,
        })
    }

    pub fn trivial(a: DenseMatrix<f64>, d: usize) -> Result<Self> {
        let n = a.rows();
        Self::new(a, TorsionFamily::trivial(n, d))
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.torsion.d()
    }

    pub fn matrix(&self) -> &DenseMatrix<f64> {
        &self.a
    }

    pub fn torsion(&self) -> &TorsionFamily {
        &self.torsion
    }

    pub fn phases(&self) -> &EigenphaseTable {
        &self.phases
    }

    pub fn offsets(&self) -> &OffsetVectors {
        &self.offsets
    }

    pub fn dual_basis(&self) -> &DenseMatrix<f64> {
        &self.dual_basis
    }

    /// Volume `μ(RT) = |det A|`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Whether fiber `j` has a vanishing offset (its phase row is zero).
    pub fn is_degenerate(&self, j: usize) -> bool {
        self.phases.is_zero_row(j)
    }
}
