//! Flat orthogonal torsion: validation, eigenphases and spectral offsets.
//!
//! A torsion family assigns to each basis vector `v_k` of the period lattice
//! an orthogonal matrix `σ^{v_k}`; the family must commute. Its joint
//! eigenvalues `e^{iω_j^(k)}` form the `d×n` phase table `Ω`, and each row
//! shifts the dual lattice by `w̄_j = -(B^T)^{-1} (ω_j/2π)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::{Error, Result};

/// Orthogonality tolerance (max-norm of `σ^T σ - I`).
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Commutation tolerance (max-norm of `σ_a σ_b - σ_b σ_a`).
pub const COMMUTATION_TOL: f64 = 1e-10;
/// Phases this close to `±π` or `0` are snapped onto them.
pub const PHASE_SNAP: f64 = 1e-10;
/// Seed of the random combination used by the joint diagonalization.
pub const DEFAULT_SEED: u64 = 0x746f_7275_7370_6563;
/// Environment variable overriding [`DEFAULT_SEED`] in the CLI.
pub const SEED_ENV: &str = "TORUS_SPECTRA_SEED";

/// The two accepted torsion encodings.
#[derive(Debug, Clone, PartialEq)]
pub enum TorsionForm {
    /// `σ^{v_1}, …, σ^{v_n}`, each `d×d` real orthogonal.
    Matrices(Vec<DenseMatrix<f64>>),
    /// `d×n` phase table with entries in `(-π, π]`.
    Phases(DenseMatrix<f64>),
}

/// A flat orthogonal torsion family on an `n`-torus with fiber dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionFamily {
    n: usize,
    d: usize,
    form: TorsionForm,
}

impl TorsionFamily {
    /// Identity torsion: every `σ^{v_k} = I_d`.
    pub fn trivial(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            form: TorsionForm::Phases(DenseMatrix::zeros(d, n)),
        }
    }

    /// Matrix form; shapes are checked here, orthogonality in [`validate`](Self::validate).
    pub fn from_matrices(sigmas: Vec<DenseMatrix<f64>>) -> Result<Self> {
        let n = sigmas.len();
        let d = sigmas.first().map_or(0, DenseMatrix::rows);
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(
                "torsion needs at least one nonempty matrix".into(),
            ));
        }
        if sigmas.iter().any(|s| s.rows() != d || s.cols() != d) {
            return Err(Error::InvalidInput(format!(
                "torsion matrices must all be {d}x{d}"
            )));
        }
        Ok(Self {
            n,
            d,
            form: TorsionForm::Matrices(sigmas),
        })
    }

    /// Phase form from rows `ω_j = (ω_j^(1), …, ω_j^(n))`.
    pub fn from_phases(rows: &[Vec<f64>]) -> Result<Self> {
        let omega = DenseMatrix::from_rows(rows)?;
        if omega.rows() == 0 || omega.cols() == 0 {
            return Err(Error::InvalidInput("phase table must be nonempty".into()));
        }
        Ok(Self {
            n: omega.cols(),
            d: omega.rows(),
            form: TorsionForm::Phases(omega),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn form(&self) -> &TorsionForm {
        &self.form
    }

    pub fn is_matrix_form(&self) -> bool {
        matches!(self.form, TorsionForm::Matrices(_))
    }

    /// Checks orthogonality and commutation (matrix form) or the phase
    /// branch (phase form), mapping phases at `-π` onto `+π`.
    pub fn validate(self) -> Result<Self> {
        match self.form {
            TorsionForm::Matrices(sigmas) => {
                let id = DenseMatrix::identity(self.d);
                for (k, s) in sigmas.iter().enumerate() {
                    if s.max_abs().is_nan() || !s.max_abs().is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "torsion matrix {k} is not finite"
                        )));
                    }
                    let residual = s.transpose().matmul(s)?.max_abs_diff(&id);
                    if residual > ORTHOGONALITY_TOL {
                        return Err(Error::NotOrthogonal { index: k, residual });
                    }
                }
                let mut worst: Option<(usize, usize, f64)> = None;
                for a in 0..sigmas.len() {
                    for b in a + 1..sigmas.len() {
                        let ab = sigmas[a].matmul(&sigmas[b])?;
                        let ba = sigmas[b].matmul(&sigmas[a])?;
                        let r = ab.max_abs_diff(&ba);
                        if r > COMMUTATION_TOL && worst.is_none_or(|w| r > w.2) {
                            worst = Some((a, b, r));
                        }
                    }
                }
                if let Some((first, second, residual)) = worst {
                    return Err(Error::NotCommuting {
                        first,
                        second,
                        residual,
                    });
                }
                Ok(Self {
                    form: TorsionForm::Matrices(sigmas),
                    ..self
                })
            }
            TorsionForm::Phases(mut omega) => {
                for row in 0..omega.rows() {
                    for col in 0..omega.cols() {
                        let value = omega[(row, col)];
                        if (value + PI).abs() <= PHASE_SNAP {
                            omega[(row, col)] = PI;
                        } else if !(value > -PI && value <= PI + PHASE_SNAP) {
                            return Err(Error::PhaseOutOfRange { row, col, value });
                        } else if value > PI {
                            omega[(row, col)] = PI;
                        }
                    }
                }
                Ok(Self {
                    form: TorsionForm::Phases(omega),
                    ..self
                })
            }
        }
    }

    /// `σ^v` for `v = Σ c_k v_k`; matrix form only.
    pub fn sigma_power(&self, c: &[i64]) -> Result<DenseMatrix<f64>> {
        let TorsionForm::Matrices(sigmas) = &self.form else {
            return Err(Error::InvalidInput(
                "sigma_power needs the matrix form".into(),
            ));
        };
        if c.len() != self.n {
            return Err(Error::InvalidInput("exponent length must equal n".into()));
        }
        let mut acc = DenseMatrix::identity(self.d);
        for (s, &ck) in sigmas.iter().zip(c) {
            let base = if ck < 0 { s.transpose() } else { s.clone() };
            acc = acc.matmul(&matrix_power(&base, ck.unsigned_abs())?)?;
        }
        Ok(acc)
    }

    /// Joint eigenphases; the phase form is returned as-is.
    pub fn eigenphases(&self, seed: u64) -> Result<EigenphaseTable> {
        match &self.form {
            TorsionForm::Phases(omega) => Ok(EigenphaseTable {
                omega: omega.clone(),
                basis: None,
            }),
            TorsionForm::Matrices(sigmas) => simultaneous_diagonalize(
                sigmas,
                &DiagonalizeOptions {
                    seed,
                    ..Default::default()
                },
            ),
        }
    }
}

fn matrix_power(base: &DenseMatrix<f64>, mut e: u64) -> Result<DenseMatrix<f64>> {
    let mut result = DenseMatrix::identity(base.rows());
    let mut b = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = result.matmul(&b)?;
        }
        e >>= 1;
        if e > 0 {
            b = b.matmul(&b)?;
        }
    }
    Ok(result)
}

/// Planar rotation by `theta`.
pub fn rotation(theta: f64) -> DenseMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) | (1, 1) => c,
        (0, 1) => -s,
        _ => s,
    })
}

/// Block-diagonal matrix from square blocks.
pub fn block_diagonal(blocks: &[DenseMatrix<f64>]) -> DenseMatrix<f64> {
    let d: usize = blocks.iter().map(DenseMatrix::rows).sum();
    let mut out = DenseMatrix::zeros(d, d);
    let mut off = 0;
    for b in blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out[(off + i, off + j)] = b[(i, j)];
            }
        }
        off += b.rows();
    }
    out
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_real(m: &DenseMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.set(i, j, Complex64::new(m[(i, j)], 0.0));
            }
        }
        out
    }

    pub fn from_columns(cols: &[Vec<Complex64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        let mut out = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &x) in c.iter().enumerate() {
                out.set(i, j, x);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "complex matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Real symmetric embedding `[[Re, -Im], [Im, Re]]` of a Hermitian matrix.
    pub fn real_embedding(&self) -> DenseMatrix<f64> {
        let m = self.rows;
        DenseMatrix::from_fn(2 * m, 2 * m, |i, j| {
            let z = self.get(i % m, j % m);
            match (i < m, j < m) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
    }
}

/// Joint eigenphases of a torsion family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenphaseTable {
    /// `d×n`; row `j` holds `(ω_j^(1), …, ω_j^(n))`.
    #[serde(serialize_with = "serialize_rows")]
    pub omega: DenseMatrix<f64>,
    /// Unitary `P` with `P^H σ^{v_k} P` diagonal (matrix form only).
    #[serde(skip)]
    pub basis: Option<ComplexMatrix>,
}

fn serialize_rows<S: serde::Serializer>(
    m: &DenseMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.to_rows())
}

impl EigenphaseTable {
    pub fn d(&self) -> usize {
        self.omega.rows()
    }

    pub fn n(&self) -> usize {
        self.omega.cols()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.omega.row(j)
    }

    /// Whether row `j` is exactly zero (a trivial line in the bundle).
    pub fn is_zero_row(&self, j: usize) -> bool {
        self.row(j).iter().all(|&w| w == 0.0)
    }

    /// Number of exactly zero rows.
    pub fn zero_rows(&self) -> usize {
        (0..self.d()).filter(|&j| self.is_zero_row(j)).count()
    }
}

/// Offsets `w̄_j` of the shifted dual lattices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetVectors {
    pub wbar: Vec<Vec<f64>>,
}

impl OffsetVectors {
    /// Max-norm of `w̄_j`.
    pub fn sup_norm(&self, j: usize) -> f64 {
        self.wbar[j].iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `w̄_j = -(B^T)^{-1}(ω_j / 2π)` for every row of the table.
pub fn offsets(table: &EigenphaseTable, b: &DenseMatrix<f64>) -> Result<OffsetVectors> {
    if !b.is_square() || b.rows() != table.n() {
        return Err(Error::InvalidInput(format!(
            "period matrix must be {n}x{n}",
            n = table.n()
        )));
    }
    let bt_inv = b.transpose().inverse()?;
    let wbar = (0..table.d())
        .map(|j| {
            let rhs: Vec<f64> = table.row(j).iter().map(|w| -w / (2.0 * PI)).collect();
            bt_inv.mul_vec(&rhs)
        })
        .collect();
    Ok(OffsetVectors { wbar })
}

/// Options of [`simultaneous_diagonalize`].
#[derive(Debug, Clone)]
pub struct DiagonalizeOptions {
    pub seed: u64,
    pub max_reseeds: usize,
    pub tolerance: f64,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            max_reseeds: 8,
            tolerance: 1e-8,
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix via its real embedding.
/// Returns ascending eigenvalues and orthonormal complex eigenvectors.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let m = h.rows();
    let eig = symmetric_eigen(&h.real_embedding())?;
    // Every eigenvalue of the embedding is doubled: [x; y] and [-y; x] both
    // map to complex multiples of x + iy.
    let scale = eig.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut values = Vec::with_capacity(m);
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut start = 0;
    while start < 2 * m {
        let mut end = start + 1;
        while end < 2 * m && eig.values[end] - eig.values[end - 1] <= tol {
            end += 1;
        }
        let candidates: Vec<Vec<Complex64>> = (start..end)
            .map(|k| {
                (0..m)
                    .map(|i| Complex64::new(eig.vectors[(i, k)], eig.vectors[(i + m, k)]))
                    .collect()
            })
            .collect();
        let want = (end - start) / 2;
        let picked = pivoted_gram_schmidt(candidates, want.max(1));
        let mean = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        for v in picked {
            values.push(mean);
            columns.push(v);
        }
        start = end;
    }
    if columns.len() != m {
        return Err(Error::NonConvergence(0));
    }
    Ok((values, ComplexMatrix::from_columns(&columns)))
}

/// Picks `count` orthonormal vectors spanning the candidates, choosing the
/// largest residual at each step.
fn pivoted_gram_schmidt(mut cands: Vec<Vec<Complex64>>, count: usize) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let (best, norm) = cands
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty candidate set");
        if norm == 0.0 {
            break;
        }
        let q: Vec<Complex64> = cands[best].iter().map(|z| z / norm).collect();
        for c in &mut cands {
            let proj: Complex64 = q.iter().zip(c.iter()).map(|(a, b)| a.conj() * b).sum();
            for (ci, qi) in c.iter_mut().zip(&q) {
                *ci -= proj * qi;
            }
        }
        out.push(q);
    }
    out
}

fn columns_of(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.cols()).map(|j| m.column(j)).collect()
}

/// Joint eigenvectors of the commuting normal matrices restricted to the
/// span of the orthonormal columns of `q`.
fn diagonalize_within(
    q: &ComplexMatrix,
    sigmas: &[ComplexMatrix],
    rng: &mut ChaCha8Rng,
    depth: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let m = q.cols();
    if m == 1 {
        return Ok(columns_of(q));
    }
    if depth > 16 {
        return Err(Error::DiagonalizationFailed {
            attempts: depth,
            residual: f64::NAN,
        });
    }
    let qh = q.adjoint();
    let restricted: Vec<ComplexMatrix> = sigmas.iter().map(|s| qh.matmul(&s.matmul(q))).collect();
    if restricted.iter().all(|s| is_scalar(s, 1e-11)) {
        return Ok(columns_of(q));
    }
    let mut g = ComplexMatrix::zeros(m, m);
    let i_unit = Complex64::new(0.0, 1.0);
    for s in &restricted {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        for r in 0..m {
            for c in 0..m {
                let x = s.get(r, c);
                let y = s.get(c, r).conj();
                let v = g.get(r, c) + (x + y) * (a / 2.0) + i_unit * (x - y) * (b / 2.0);
                g.set(r, c, v);
            }
        }
    }
    let (vals, vecs) = hermitian_eigen(&g)?;
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && vals[end] - vals[end - 1] <= 1e-7 * scale {
            end += 1;
        }
        let cols: Vec<Vec<Complex64>> = (start..end).map(|k| vecs.column(k)).collect();
        let sub = q.matmul(&ComplexMatrix::from_columns(&cols));
        if end - start == 1 {
            out.extend(columns_of(&sub));
        } else {
            out.extend(diagonalize_within(&sub, sigmas, rng, depth + 1)?);
        }
        start = end;
    }
    Ok(out)
}

fn is_scalar(s: &ComplexMatrix, tol: f64) -> bool {
    let d0 = s.get(0, 0);
    (0..s.rows()).all(|i| {
        (0..s.cols()).all(|j| {
            let want = if i == j { d0 } else { Complex64::new(0.0, 0.0) };
            (s.get(i, j) - want).norm() <= tol
        })
    })
}

fn snap_phase(w: f64) -> f64 {
    if (w.abs() - PI).abs() <= PHASE_SNAP {
        PI
    } else if w.abs() <= PHASE_SNAP {
        0.0
    } else {
        w
    }
}

/// Joint diagonalization of commuting orthogonal matrices.
///
/// A random Hermitian combination of the family is diagonalized, degenerate
/// clusters are split recursively with fresh coefficients, and phases are
/// read off Rayleigh quotients. Columns are ordered lexicographically by
/// phase row.
pub fn simultaneous_diagonalize(
    sigmas: &[DenseMatrix<f64>],
    opts: &DiagonalizeOptions,
) -> Result<EigenphaseTable> {
    let d = sigmas.first().map_or(0, DenseMatrix::rows);
    let n = sigmas.len();
    let cs: Vec<ComplexMatrix> = sigmas.iter().map(ComplexMatrix::from_real).collect();
    let mut identity = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        identity.set(i, i, Complex64::new(1.0, 0.0));
    }
    let mut worst = f64::INFINITY;
    for attempt in 0..=opts.max_reseeds {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt as u64));
        let cols = match diagonalize_within(&identity, &cs, &mut rng, 0) {
            Ok(c) if c.len() == d => c,
            _ => continue,
        };
        let p = ComplexMatrix::from_columns(&cols);
        let ph = p.adjoint();
        let mut omega = DenseMatrix::zeros(d, n);
        let mut residual = 0.0f64;
        for (k, s) in cs.iter().enumerate() {
            let t = ph.matmul(&s.matmul(&p));
            for j in 0..d {
                omega[(j, k)] = snap_phase(t.get(j, j).arg());
            }
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j {
                        Complex64::from_polar(1.0, omega[(j, k)])
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    residual = residual.max((t.get(i, j) - want).norm());
                }
            }
        }
        if residual < opts.tolerance {
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| {
                omega
                    .row(a)
                    .partial_cmp(omega.row(b))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let sorted = DenseMatrix::from_fn(d, n, |j, k| omega[(order[j], k)]);
            let basis = ComplexMatrix::from_columns(
                &order.iter().map(|&j| cols[j].clone()).collect::<Vec<_>>(),
            );
            return Ok(EigenphaseTable {
                omega: sorted,
                basis: Some(basis),
            });
        }
        worst = worst.min(residual);
    }
    Err(Error::DiagonalizationFailed {
        attempts: opts.max_reseeds + 1,
        residual: worst,
    })
}

/// Seed from the environment variable [`SEED_ENV`], or [`DEFAULT_SEED`].
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{
        any, prop, prop_assert, prop_assert_eq, prop_assume, proptest, Strategy,
    };

    fn reflection() -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap()
    }

    fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
        // Eigenvectors of a random symmetric matrix form an orthogonal matrix.
        let raw: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = DenseMatrix::from_fn(d, d, |i, j| raw[i * d + j] + raw[j * d + i]);
        symmetric_eigen(&s).unwrap().vectors
    }

    /// Commuting family `Q·diag(blocks_k)·Q^T`.
    fn conjugated_family(
        angles: &[Vec<f64>],
        signs: &[f64],
        q: &DenseMatrix<f64>,
    ) -> Vec<DenseMatrix<f64>> {
        angles
            .iter()
            .zip(signs)
            .map(|(row, &sign)| {
                let mut blocks: Vec<DenseMatrix<f64>> = row.iter().map(|&a| rotation(a)).collect();
                if q.rows() % 2 == 1 {
                    blocks.push(DenseMatrix::from_rows(&[vec![sign]]).unwrap());
                }
                let b = block_diagonal(&blocks);
                q.matmul(&b).unwrap().matmul(&q.transpose()).unwrap()
            })
            .collect()
    }

    #[test]
    fn validate_examples() {
        let t = TorsionFamily::from_matrices(vec![rotation(PI / 2.0)]).unwrap();
        assert!(t.validate().is_ok());
        let t = TorsionFamily::from_matrices(vec![rotation(0.7), reflection()]).unwrap();
        assert!(matches!(
            t.validate(),
            Err(Error::NotCommuting {
                first: 0,
                second: 1,
                ..
            })
        ));
        let t = TorsionFamily::from_phases(&[vec![3.0 * PI + 0.1]]).unwrap();
        assert!(matches!(t.validate(), Err(Error::PhaseOutOfRange { .. })));
        let t = TorsionFamily::from_phases(&[vec![-PI]])
            .unwrap()
            .validate()
            .unwrap();
        let TorsionForm::Phases(om) = t.form() else {
            unreachable!()
        };
        assert_eq!(om[(0, 0)], PI);
        let skew = DenseMatrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        let t = TorsionFamily::from_matrices(vec![skew]).unwrap();
        assert!(matches!(
            t.validate(),
            Err(Error::NotOrthogonal { index: 0, .. })
        ));
    }

    #[test]
    fn identity_has_zero_phases() {
        let t =
            TorsionFamily::from_matrices(vec![DenseMatrix::identity(3), DenseMatrix::identity(3)])
                .unwrap();
        let tab = t.eigenphases(DEFAULT_SEED).unwrap();
        assert!(tab.omega.max_abs() == 0.0);
        assert_eq!(tab.zero_rows(), 3);
    }

    #[test]
    fn quarter_turn_phases() {
        let t = TorsionFamily::from_matrices(vec![rotation(PI / 2.0)]).unwrap();
        let tab = t.eigenphases(DEFAULT_SEED).unwrap();
        assert!((tab.omega[(0, 0)] + PI / 2.0).abs() < 1e-12);
        assert!((tab.omega[(1, 0)] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_rotations_pair_rows() {
        let (alpha, beta) = (0.4, -1.1);
        let t = TorsionFamily::from_matrices(vec![rotation(alpha), rotation(beta)]).unwrap();
        let tab = t.eigenphases(DEFAULT_SEED).unwrap();
        // Direct 2x2 oracle: rotation(θ)·(1, -i) = e^{iθ}(1, -i).
        let v = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)];
        let apply = |m: &DenseMatrix<f64>| {
            let w0 = v[0] * m[(0, 0)] + v[1] * m[(0, 1)];
            (w0 / v[0]).arg()
        };
        let want_a = apply(&rotation(alpha));
        let want_b = apply(&rotation(beta));
        assert!((want_a - alpha).abs() < 1e-14 && (want_b - beta).abs() < 1e-14);
        assert!((tab.omega[(0, 0)] + alpha).abs() < 1e-12);
        assert!((tab.omega[(0, 1)] + beta).abs() < 1e-12);
        assert!((tab.omega[(1, 0)] - alpha).abs() < 1e-12);
        assert!((tab.omega[(1, 1)] - beta).abs() < 1e-12);
    }

    #[test]
    fn minus_identity_snaps_to_pi() {
        let t = TorsionFamily::from_matrices(vec![rotation(PI)]).unwrap();
        let tab = t.eigenphases(DEFAULT_SEED).unwrap();
        assert_eq!(tab.omega[(0, 0)], PI);
        assert_eq!(tab.omega[(1, 0)], PI);
    }

    #[test]
    fn offsets_examples() {
        let b = DenseMatrix::from_rows(&[vec![3.0]]).unwrap();
        let tab = |w: f64| EigenphaseTable {
            omega: DenseMatrix::from_rows(&[vec![w]]).unwrap(),
            basis: None,
        };
        assert_eq!(offsets(&tab(0.0), &b).unwrap().wbar[0][0], 0.0);
        assert!((offsets(&tab(PI), &b).unwrap().wbar[0][0] + 1.0 / 6.0).abs() < 1e-15);
        assert!((offsets(&tab(-PI / 2.0), &b).unwrap().wbar[0][0] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_power_basics() {
        let t = TorsionFamily::from_matrices(vec![rotation(0.3), rotation(-0.8)]).unwrap();
        assert_eq!(t.sigma_power(&[0, 0]).unwrap(), DenseMatrix::identity(2));
        assert!(t.sigma_power(&[1, 0]).unwrap().max_abs_diff(&rotation(0.3)) < 1e-15);
        let s1 = rotation(0.3);
        let s2 = rotation(-0.8);
        let ab = s1.matmul(&s2).unwrap();
        let ba = s2.matmul(&s1).unwrap();
        assert!(ab.max_abs_diff(&ba) < 1e-12);
        assert!(t.sigma_power(&[1, 1]).unwrap().max_abs_diff(&ba) < 1e-12);
        assert!(
            t.sigma_power(&[-3, 2])
                .unwrap()
                .max_abs_diff(&rotation(-0.9 - 1.6))
                < 1e-12
        );
        let phases = TorsionFamily::trivial(2, 1);
        assert!(phases.sigma_power(&[1, 0]).is_err());
    }

    fn family_strategy() -> impl Strategy<Value = (usize, Vec<DenseMatrix<f64>>)> {
        (1usize..=3, 1usize..=5, any::<u64>()).prop_map(|(n, d, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_orthogonal(d, &mut rng);
            let angles: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..d / 2)
                        .map(|_| match rng.gen_range(0..4) {
                            0 => 0.0,
                            1 => PI,
                            _ => rng.gen_range(-PI..PI),
                        })
                        .collect()
                })
                .collect();
            let signs: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            (n, conjugated_family(&angles, &signs, &q))
        })
    }

    proptest! {
        #[test]
        fn joint_diagonalization_residual((n, sigmas) in family_strategy()) {
            let t = TorsionFamily::from_matrices(sigmas.clone()).unwrap().validate().unwrap();
            let tab = t.eigenphases(DEFAULT_SEED).unwrap();
            prop_assert_eq!(tab.n(), n);
            let p = tab.basis.as_ref().unwrap();
            let ph = p.adjoint();
            for (k, s) in sigmas.iter().enumerate() {
                let t = ph.matmul(&ComplexMatrix::from_real(s).matmul(p));
                for i in 0..tab.d() {
                    for j in 0..tab.d() {
                        let want = if i == j { Complex64::from_polar(1.0, tab.omega[(j, k)]) } else { Complex64::new(0.0, 0.0) };
                        prop_assert!((t.get(i, j) - want).norm() < 1e-8);
                    }
                }
            }
            // Real matrices: phases come in conjugate pairs.
            for k in 0..n {
                for j in 0..tab.d() {
                    let w = tab.omega[(j, k)];
                    if w != 0.0 && w != PI {
                        prop_assert!((0..tab.d()).any(|jj| (tab.omega[(jj, k)] + w).abs() < 1e-8));
                    }
                }
            }
            for w in tab.omega.to_rows().concat() {
                prop_assert!(w > -PI && w <= PI);
            }
        }

        #[test]
        fn sigma_power_homomorphism((n, sigmas) in family_strategy(), c1 in prop::collection::vec(-4i64..4, 3), c2 in prop::collection::vec(-4i64..4, 3)) {
            let t = TorsionFamily::from_matrices(sigmas).unwrap();
            let (c1, c2) = (&c1[..n], &c2[..n]);
            let sum: Vec<i64> = c1.iter().zip(c2).map(|(a, b)| a + b).collect();
            let lhs = t.sigma_power(c1).unwrap().matmul(&t.sigma_power(c2).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&t.sigma_power(&sum).unwrap()) < 1e-10);
        }

        #[test]
        fn offsets_back_substitute(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..4),
                                   b in prop::collection::vec(-5.0f64..5.0, 4)) {
            let bm = DenseMatrix::from_rows(&[b[..2].to_vec(), b[2..].to_vec()]).unwrap();
            prop_assume!(bm.determinant().unwrap().abs() > 0.1);
            let tab = EigenphaseTable { omega: DenseMatrix::from_rows(&rows).unwrap(), basis: None };
            let off = offsets(&tab, &bm).unwrap();
            let bt = bm.transpose();
            for (j, w) in off.wbar.iter().enumerate() {
                let back = bt.mul_vec(w);
                for k in 0..2 {
                    prop_assert!((back[k] + tab.omega[(j, k)] / (2.0 * PI)).abs() < 1e-12);
                }
            }
        }
    }
}
