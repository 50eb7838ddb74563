//! Closed-form spectra of both tori, the explicit connection Laplacian of the
//! discrete torus, and multiset comparison.

use num_complex::Complex64;
use serde::Serialize;

use crate::connection::{ComplexMatrix, TorsionForm};
use crate::lattice::{enumerate_shifted_ball, CosetIndexer, DEFAULT_ENUMERATION_CAP};
use crate::linalg::{symmetric_eigenvalues, DenseMatrix};
use crate::torus::{center_mod1, DiscreteTorus, RealTorus};
use crate::{Error, Real, Result};

/// Largest `d·N` accepted by [`assemble_dt_laplacian`].
pub const ORACLE_CAP: usize = 2000;

/// Default zero threshold of [`kernel_dimension`].
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    ClosedForm,
    Oracle,
}

impl SpectrumSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumSource::ClosedForm => "closed_form",
            SpectrumSource::Oracle => "oracle",
        }
    }
}

/// One eigenvalue with its provenance; oracle entries carry no label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueEntry<T> {
    pub lambda: T,
    /// Fiber index, 1-based.
    pub j: Option<usize>,
    pub w: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult<T> {
    pub entries: Vec<EigenvalueEntry<T>>,
    pub source: SpectrumSource,
    /// Radius bound on `|w|` (continuum only).
    pub cutoff: Option<T>,
}

impl<T: Real> SpectrumResult<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Eigenvalues in ascending order.
    pub fn sorted_values(&self) -> Vec<T> {
        let mut v: Vec<T> = self.entries.iter().map(|e| e.lambda).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        v
    }

    pub fn trace(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, e| acc + e.lambda)
    }
}

/// Spectrum of the discrete torus: for each fiber `j` and dual coset rep
/// `w_0`, `λ = 4 Σ sin²(π w_k)` at `w = w_0 + w̄_j`.
pub fn dt_spectrum_closed<T: Real>(torus: &DiscreteTorus) -> SpectrumResult<T> {
    let pi = T::PI();
    let four = T::lit(4.0);
    let mut entries = Vec::with_capacity(torus.d() * torus.vertices());
    for j in 0..torus.d() {
        for w in torus.fiber_points(j) {
            let wt: Vec<T> = w.iter().map(|&x| T::lit(x)).collect();
            let lambda = four
                * wt.iter().fold(T::zero(), |acc, &x| {
                    let s = (pi * x).sin();
                    acc + s * s
                });
            entries.push(EigenvalueEntry {
                lambda,
                j: Some(j + 1),
                w: Some(wt),
            });
        }
    }
    SpectrumResult {
        entries,
        source: SpectrumSource::ClosedForm,
        cutoff: None,
    }
}

/// Spectrum of the real torus below the cutoff: `λ = 4π²|w|²` for
/// `w ∈ Γ^* + w̄_j` with `|w| ≤ R`.
pub fn rt_spectrum_closed<T: Real>(torus: &RealTorus, radius: f64) -> Result<SpectrumResult<T>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("cutoff radius must be positive".into()));
    }
    let four_pi2 = T::lit(4.0) * T::PI() * T::PI();
    let mut entries = Vec::new();
    for j in 0..torus.d() {
        let pts = enumerate_shifted_ball(
            torus.dual_basis(),
            &torus.offsets().wbar[j],
            radius,
            DEFAULT_ENUMERATION_CAP,
        )?;
        for p in pts {
            let wt: Vec<T> = p.v.iter().map(|&x| T::lit(x)).collect();
            let norm2 = wt.iter().fold(T::zero(), |acc, &x| acc + x * x);
            entries.push(EigenvalueEntry {
                lambda: four_pi2 * norm2,
                j: Some(j + 1),
                w: Some(wt),
            });
        }
    }
    Ok(SpectrumResult {
        entries,
        source: SpectrumSource::ClosedForm,
        cutoff: Some(T::lit(radius)),
    })
}

/// Dense connection Laplacian of a discrete torus.
///
/// Vertices follow the coset-index order with fiber blocks of size `d`. For a
/// phase-form bundle the operator is complex Hermitian and is stored through
/// its real embedding `[[Re, -Im], [Im, Re]]`, which doubles every eigenvalue.
#[derive(Debug, Clone)]
pub struct ConnectionLaplacianMatrix<T> {
    pub matrix: DenseMatrix<T>,
    pub vertices: usize,
    pub fiber_dim: usize,
    pub complex_doubled: bool,
}

enum EdgeBlocks<'a> {
    Real(&'a crate::connection::TorsionFamily),
    /// Phases all in `{0, π}`: real diagonal blocks `diag(±1)`.
    Signs(&'a DenseMatrix<f64>),
    Phases(&'a DenseMatrix<f64>),
}

/// Assembles `L H(x) = Σ_{y∼x} (H(x) - φ_{xy} H(y))`.
///
/// A neighbor `x ± e_i` is reduced to its representative `r`; the crossing
/// `v = (x ± e_i) - r ∈ M Z^n` has coordinates `c = M^{-1} v`, and the edge
/// block is `(σ^c)^T`.
pub fn assemble_dt_laplacian<T: Real>(
    torus: &DiscreteTorus,
) -> Result<ConnectionLaplacianMatrix<T>> {
    let n = torus.n();
    let d = torus.d();
    let count = torus.vertices();
    let size = d * count;
    if size > ORACLE_CAP {
        return Err(Error::OracleTooLarge {
            size,
            cap: ORACLE_CAP,
        });
    }
    let indexer = CosetIndexer::new(torus.matrix())?;
    let blocks = match torus.torsion().form() {
        TorsionForm::Matrices(_) => EdgeBlocks::Real(torus.torsion()),
        TorsionForm::Phases(omega)
            if omega
                .to_rows()
                .concat()
                .iter()
                .all(|&w| w == 0.0 || w == std::f64::consts::PI) =>
        {
            EdgeBlocks::Signs(omega)
        }
        TorsionForm::Phases(omega) => EdgeBlocks::Phases(omega),
    };
    let mut real = DenseMatrix::<f64>::zeros(size, size);
    let mut complex = ComplexMatrix::zeros(
        if matches!(blocks, EdgeBlocks::Phases(_)) {
            size
        } else {
            0
        },
        if matches!(blocks, EdgeBlocks::Phases(_)) {
            size
        } else {
            0
        },
    );
    for a in 0..count {
        let x = indexer.rep(a)?;
        for i in 0..n {
            for step in [1i64, -1] {
                let mut y = x.clone();
                y[i] += step;
                let cls = indexer.classify(&y)?;
                let v: Vec<i64> = y.iter().zip(&cls.z).map(|(p, q)| p - q).collect();
                let c = torus
                    .matrix()
                    .solve_integer(&v)?
                    .expect("crossing vector lies in the period lattice");
                let b = cls.index;
                match &blocks {
                    EdgeBlocks::Real(t) => {
                        let s = t.sigma_power(&c)?;
                        for p in 0..d {
                            real[(a * d + p, a * d + p)] += 1.0;
                            for q in 0..d {
                                real[(a * d + p, b * d + q)] -= s[(q, p)];
                            }
                        }
                    }
                    EdgeBlocks::Signs(omega) => {
                        for p in 0..d {
                            let flips: i64 = c
                                .iter()
                                .enumerate()
                                .filter(|&(k, _)| omega[(p, k)] != 0.0)
                                .map(|(_, &ck)| ck)
                                .sum();
                            let sign = if flips.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                            real[(a * d + p, a * d + p)] += 1.0;
                            real[(a * d + p, b * d + p)] -= sign;
                        }
                    }
                    EdgeBlocks::Phases(omega) => {
                        for p in 0..d {
                            let r = a * d + p;
                            complex.set(r, r, complex.get(r, r) + 1.0);
                            let angle: f64 = c
                                .iter()
                                .enumerate()
                                .map(|(k, &ck)| ck as f64 * omega[(p, k)])
                                .sum();
                            let col = b * d + p;
                            complex.set(
                                r,
                                col,
                                complex.get(r, col) - Complex64::from_polar(1.0, -angle),
                            );
                        }
                    }
                }
            }
        }
    }
    let (matrix, complex_doubled) = match blocks {
        EdgeBlocks::Real(_) | EdgeBlocks::Signs(_) => (real.cast::<T>(), false),
        EdgeBlocks::Phases(_) => (complex.real_embedding().cast::<T>(), true),
    };
    Ok(ConnectionLaplacianMatrix {
        matrix,
        vertices: count,
        fiber_dim: d,
        complex_doubled,
    })
}

/// All eigenvalues of the explicit Laplacian, ascending.
pub fn oracle_spectrum<T: Real>(l: &ConnectionLaplacianMatrix<T>) -> Result<SpectrumResult<T>> {
    let vals = symmetric_eigenvalues(&l.matrix)?;
    let vals: Vec<T> = if l.complex_doubled {
        vals.chunks(2)
            .map(|p| (p[0] + p[1]) / T::lit(2.0))
            .collect()
    } else {
        vals
    };
    Ok(SpectrumResult {
        entries: vals
            .into_iter()
            .map(|lambda| EigenvalueEntry {
                lambda,
                j: None,
                w: None,
            })
            .collect(),
        source: SpectrumSource::Oracle,
        cutoff: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport<T> {
    pub count: usize,
    pub max_deviation: T,
    pub tolerance: T,
    pub passed: bool,
}

/// Sorted comparison of two spectra.
pub fn compare_multisets<T: Real>(
    a: &SpectrumResult<T>,
    b: &SpectrumResult<T>,
    tol: T,
) -> Result<MatchReport<T>> {
    if a.len() != b.len() {
        return Err(Error::CardinalityMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let max_deviation = a
        .sorted_values()
        .iter()
        .zip(b.sorted_values())
        .fold(T::zero(), |m, (&x, y)| m.max((x - y).abs()));
    Ok(MatchReport {
        count: a.len(),
        max_deviation,
        tolerance: tol,
        passed: max_deviation < tol,
    })
}

/// Number of entries with `λ ≤ tol`.
pub fn kernel_dimension<T: Real>(s: &SpectrumResult<T>, tol: T) -> usize {
    s.entries.iter().filter(|e| e.lambda <= tol).count()
}

/// Multiplicities of the sorted values, grouping neighbors closer than `tol`.
pub fn multiplicities<T: Real>(sorted: &[T], tol: T) -> Vec<(T, usize)> {
    let mut out: Vec<(T, usize)> = Vec::new();
    let mut prev: Option<T> = None;
    for &x in sorted {
        match (out.last_mut(), prev) {
            (Some(last), Some(p)) if x - p <= tol => last.1 += 1,
            _ => out.push((x, 1)),
        }
        prev = Some(x);
    }
    out
}

/// `w` mod `Z^n`, centered; exposed for labeling.
pub fn centered(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&x| center_mod1(x)).collect()
}
