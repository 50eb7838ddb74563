//! Exact integer-lattice arithmetic: determinants, Smith normal form, coset
//! representatives of `Z^n / M Z^n` and of the dual quotient, and radius-bounded
//! lattice enumeration.

use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::{Error, Rational, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 4;

/// Default cap on `|det M|` for closed-form paths.
pub const DEFAULT_MAX_VERTICES: u64 = 1_000_000;

/// Default cap on the number of points returned by lattice enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 2_000_000;

/// Square integer matrix of dimension `1..=4`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl TryFrom<Vec<Vec<i64>>> for IntMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self> {
        IntMatrix::from_rows(&rows)
    }
}

impl From<IntMatrix> for Vec<Vec<i64>> {
    fn from(m: IntMatrix) -> Self {
        m.to_rows()
    }
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimension {n} outside the supported range 1..={MAX_DIM}"
            )));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("integer matrix must be square".into()));
        }
        Ok(Self {
            n,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1; n])
    }

    pub fn diagonal(diag: &[i64]) -> Self {
        let n = diag.len();
        assert!((1..=MAX_DIM).contains(&n), "dimension out of range");
        let mut entries = vec![0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * n + i] = d;
        }
        Self { n, entries }
    }

    /// `1×1` matrix `[m]`, the cycle of length `|m|`.
    pub fn scalar(m: i64) -> Self {
        Self::diagonal(&[m])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: i64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(<[i64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(i, j, self.get(j, i));
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[i64]) -> Result<Vec<i64>> {
        (0..self.n)
            .map(|i| {
                (0..self.n).try_fold(0i64, |acc, j| {
                    self.get(i, j)
                        .checked_mul(x[j])
                        .and_then(|p| acc.checked_add(p))
                        .ok_or(Error::Overflow)
                })
            })
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Self::identity(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let v = (0..self.n).try_fold(0i64, |acc, k| {
                    self.get(i, k)
                        .checked_mul(other.get(k, j))
                        .and_then(|p| acc.checked_add(p))
                        .ok_or(Error::Overflow)
                })?;
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    /// Exact determinant (fraction-free Bareiss elimination in `i128`).
    pub fn det(&self) -> i64 {
        let n = self.n;
        let mut a: Vec<i128> = self.entries.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k * n + k] == 0 {
                match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                    Some(r) => {
                        for j in 0..n {
                            a.swap(k * n + j, r * n + j);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i * n + j] =
                        (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
                }
            }
            prev = a[k * n + k];
        }
        (sign * a[n * n - 1]) as i64
    }

    /// Adjugate matrix, so that `M · adj(M) = det(M) · I`.
    pub fn adjugate(&self) -> Self {
        let n = self.n;
        if n == 1 {
            return Self::scalar(1);
        }
        let mut adj = self.clone();
        for i in 0..n {
            for j in 0..n {
                let minor: Vec<Vec<i64>> = (0..n)
                    .filter(|&r| r != j)
                    .map(|r| (0..n).filter(|&c| c != i).map(|c| self.get(r, c)).collect())
                    .collect();
                let cof = IntMatrix {
                    n: n - 1,
                    entries: minor.concat(),
                }
                .det();
                adj.set(i, j, if (i + j) % 2 == 0 { cof } else { -cof });
            }
        }
        adj
    }

    /// `|det M|`, or `SingularMatrix`.
    pub fn index(&self) -> Result<u64> {
        match self.det() {
            0 => Err(Error::SingularMatrix),
            d => Ok(d.unsigned_abs()),
        }
    }

    /// Exact rational solution of `M x = b`.
    pub fn solve_rational(&self, b: &[Rational]) -> Result<Vec<Rational>> {
        let det = self.det();
        if det == 0 {
            return Err(Error::SingularMatrix);
        }
        let adj = self.adjugate();
        Ok((0..self.n)
            .map(|i| {
                (0..self.n).fold(Rational::zero(), |acc, j| acc + b[j] * adj.get(i, j))
                    / Rational::from_integer(det)
            })
            .collect())
    }

    /// Exact integer solution of `M c = v`; `None` if `v ∉ M Z^n`.
    pub fn solve_integer(&self, v: &[i64]) -> Result<Option<Vec<i64>>> {
        let det = self.det();
        if det == 0 {
            return Err(Error::SingularMatrix);
        }
        let adj = self.adjugate();
        let num = adj.mul_vec(v)?;
        Ok(num
            .iter()
            .map(|&x| if x % det == 0 { Some(x / det) } else { None })
            .collect())
    }
}

/// Smith normal form `U·M·V = D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfDecomposition {
    pub u: IntMatrix,
    pub v: IntMatrix,
    /// Diagonal of `D`, positive, with `d_1 | d_2 | … | d_n`.
    pub diag: Vec<i64>,
}

impl SnfDecomposition {
    pub fn d(&self) -> IntMatrix {
        IntMatrix::diagonal(&self.diag)
    }
}

fn checked_row_axpy(m: &mut IntMatrix, dst: usize, src: usize, q: i64) -> Result<()> {
    for j in 0..m.n {
        let v = q
            .checked_mul(m.get(src, j))
            .and_then(|p| m.get(dst, j).checked_sub(p))
            .ok_or(Error::Overflow)?;
        m.set(dst, j, v);
    }
    Ok(())
}

fn checked_col_axpy(m: &mut IntMatrix, dst: usize, src: usize, q: i64) -> Result<()> {
    for i in 0..m.n {
        let v = q
            .checked_mul(m.get(i, src))
            .and_then(|p| m.get(i, dst).checked_sub(p))
            .ok_or(Error::Overflow)?;
        m.set(i, dst, v);
    }
    Ok(())
}

fn swap_rows(m: &mut IntMatrix, a: usize, b: usize) {
    for j in 0..m.n {
        m.entries.swap(a * m.n + j, b * m.n + j);
    }
}

fn swap_cols(m: &mut IntMatrix, a: usize, b: usize) {
    for i in 0..m.n {
        m.entries.swap(i * m.n + a, i * m.n + b);
    }
}

/// Smith normal form by repeated pivoting on the smallest nonzero entry.
pub fn smith_normal_form(m: &IntMatrix) -> Result<SnfDecomposition> {
    if m.det() == 0 {
        return Err(Error::SingularMatrix);
    }
    let n = m.n;
    let mut d = m.clone();
    let mut u = IntMatrix::identity(n);
    let mut v = IntMatrix::identity(n);
    for k in 0..n {
        loop {
            let (pi, pj) = (k..n)
                .flat_map(|i| (k..n).map(move |j| (i, j)))
                .filter(|&(i, j)| d.get(i, j) != 0)
                .min_by_key(|&(i, j)| d.get(i, j).unsigned_abs())
                .ok_or(Error::SingularMatrix)?;
            swap_rows(&mut d, k, pi);
            swap_rows(&mut u, k, pi);
            swap_cols(&mut d, k, pj);
            swap_cols(&mut v, k, pj);
            let p = d.get(k, k);
            let mut clean = true;
            for i in k + 1..n {
                let q = d.get(i, k) / p;
                checked_row_axpy(&mut d, i, k, q)?;
                checked_row_axpy(&mut u, i, k, q)?;
                clean &= d.get(i, k) == 0;
            }
            for j in k + 1..n {
                let q = d.get(k, j) / p;
                checked_col_axpy(&mut d, j, k, q)?;
                checked_col_axpy(&mut v, j, k, q)?;
                clean &= d.get(k, j) == 0;
            }
            if !clean {
                continue;
            }
            let offender = (k + 1..n)
                .flat_map(|i| (k + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| d.get(i, j) % p != 0);
            match offender {
                Some((i, _)) => {
                    // Pull the offending row into the pivot row; the next pass
                    // reduces the pivot to a proper divisor.
                    checked_row_axpy(&mut d, k, i, -1)?;
                    checked_row_axpy(&mut u, k, i, -1)?;
                }
                None => break,
            }
        }
        if d.get(k, k) < 0 {
            for j in 0..n {
                d.set(k, j, -d.get(k, j));
                u.set(k, j, -u.get(k, j));
            }
        }
    }
    let diag = (0..n).map(|i| d.get(i, i)).collect();
    Ok(SnfDecomposition { u, v, diag })
}

/// A canonical representative of a coset in `Z^n / M Z^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CosetRep {
    pub z: Vec<i64>,
    pub index: usize,
}

/// Classifier for `Z^n / M Z^n` built from the Smith normal form.
///
/// A point `x` has invariant `c = (U x) mod D`; its canonical representative
/// is `U^{-1} c`, and its index is the mixed-radix value of `c` (last
/// coordinate fastest).
#[derive(Debug, Clone)]
pub struct CosetIndexer {
    m: IntMatrix,
    snf: SnfDecomposition,
    u_inv: IntMatrix,
    count: usize,
}

impl CosetIndexer {
    pub fn new(m: &IntMatrix) -> Result<Self> {
        let snf = smith_normal_form(m)?;
        // det U = ±1, so adj(U)·det(U) is the integer inverse.
        let det_u = snf.u.det();
        let mut u_inv = snf.u.adjugate();
        for x in &mut u_inv.entries {
            *x *= det_u;
        }
        let count = snf
            .diag
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or(Error::Overflow)?;
        Ok(Self {
            m: m.clone(),
            snf,
            u_inv,
            count,
        })
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.m
    }

    pub fn snf(&self) -> &SnfDecomposition {
        &self.snf
    }

    /// Number of cosets, `|det M|`.
    pub fn count(&self) -> usize {
        self.count
    }

    fn invariant(&self, x: &[i64]) -> Result<Vec<i64>> {
        let ux = self.snf.u.mul_vec(x)?;
        Ok(ux
            .iter()
            .zip(&self.snf.diag)
            .map(|(&y, &d)| y.rem_euclid(d))
            .collect())
    }

    fn index_of_invariant(&self, c: &[i64]) -> usize {
        c.iter()
            .zip(&self.snf.diag)
            .fold(0usize, |acc, (&ci, &d)| acc * d as usize + ci as usize)
    }

    fn invariant_of_index(&self, mut index: usize) -> Vec<i64> {
        let mut c = vec![0; self.m.n];
        for (ci, &d) in c.iter_mut().zip(&self.snf.diag).rev() {
            *ci = (index % d as usize) as i64;
            index /= d as usize;
        }
        c
    }

    /// Coset index of an arbitrary integer point.
    pub fn index_of(&self, x: &[i64]) -> Result<usize> {
        Ok(self.index_of_invariant(&self.invariant(x)?))
    }

    /// Canonical representative with the given index.
    pub fn rep(&self, index: usize) -> Result<Vec<i64>> {
        self.u_inv.mul_vec(&self.invariant_of_index(index))
    }

    /// Canonical representative of the coset containing `x`, with its index.
    pub fn classify(&self, x: &[i64]) -> Result<CosetRep> {
        let c = self.invariant(x)?;
        Ok(CosetRep {
            z: self.u_inv.mul_vec(&c)?,
            index: self.index_of_invariant(&c),
        })
    }

    pub fn reps(&self) -> Result<Vec<CosetRep>> {
        (0..self.count)
            .map(|index| {
                Ok(CosetRep {
                    z: self.rep(index)?,
                    index,
                })
            })
            .collect()
    }
}

/// Canonical representatives of `Z^n / M Z^n`, in index order.
pub fn vertex_coset_reps(m: &IntMatrix) -> Result<Vec<CosetRep>> {
    CosetIndexer::new(m)?.reps()
}

/// Exact determinant.
pub fn det(m: &IntMatrix) -> i64 {
    m.det()
}

/// The `|det M|` vectors `(M^T)^{-1} z` reducing `Γ^*/Z^n`, each in `[0,1)^n`.
pub fn dual_coset_reps(m: &IntMatrix) -> Result<Vec<Vec<Rational>>> {
    let mt = m.transpose();
    let reps = vertex_coset_reps(&mt)?;
    reps.iter()
        .map(|r| {
            let b: Vec<Rational> = r.z.iter().map(|&x| Rational::from_integer(x)).collect();
            let w = mt.solve_rational(&b)?;
            Ok(w.into_iter().map(|x| x - x.floor()).collect())
        })
        .collect()
}

/// `x mod 1` into `[0, 1)`.
pub fn frac(x: Rational) -> Rational {
    x - x.floor()
}

/// One enumerated lattice point `v = B·z (+ shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub z: Vec<i64>,
    pub v: Vec<f64>,
}

/// All `z` with `|A z| ≤ R`.
pub fn enumerate_lattice_ball(
    a: &DenseMatrix<f64>,
    radius: f64,
    cap: usize,
) -> Result<Vec<LatticePoint>> {
    let zero = vec![0.0; a.rows()];
    enumerate_shifted_ball(a, &zero, radius, cap)
}

/// All `z` with `|B z + s| ≤ R`, in lexicographic order of `z`.
///
/// The search box uses `|z_i + (B^{-1}s)_i| ≤ R·‖row_i(B^{-1})‖`, which holds
/// for every point of the ball.
pub fn enumerate_shifted_ball(
    b: &DenseMatrix<f64>,
    shift: &[f64],
    radius: f64,
    cap: usize,
) -> Result<Vec<LatticePoint>> {
    let n = b.rows();
    if !b.is_square() || shift.len() != n || n == 0 || n > MAX_DIM {
        return Err(Error::InvalidInput(
            "enumeration basis must be square with matching shift".into(),
        ));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!(
            "enumeration radius {radius} must be finite and nonnegative"
        )));
    }
    let inv = b.inverse()?;
    let center = inv.mul_vec(shift);
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    let mut box_size = 1f64;
    for i in 0..n {
        let reach = radius * inv.row_norm(i);
        let l = (-center[i] - reach).ceil();
        let h = (-center[i] + reach).floor();
        if !(l.abs() < 1e15 && h.abs() < 1e15) {
            return Err(Error::RadiusTooLarge { radius, cap });
        }
        lo[i] = l as i64;
        hi[i] = h as i64;
        box_size *= (h - l + 1.0).max(0.0);
    }
    if box_size > 16.0 * cap as f64 + 1024.0 {
        return Err(Error::RadiusTooLarge { radius, cap });
    }
    let mut out = Vec::new();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Ok(out);
    }
    let r2 = radius * radius * (1.0 + 1e-14);
    let mut z = lo.clone();
    loop {
        let mut v = shift.to_vec();
        for (i, vi) in v.iter_mut().enumerate() {
            for (j, &zj) in z.iter().enumerate() {
                *vi += b[(i, j)] * zj as f64;
            }
        }
        if v.iter().map(|x| x * x).sum::<f64>() <= r2 {
            if out.len() == cap {
                return Err(Error::RadiusTooLarge { radius, cap });
            }
            out.push(LatticePoint { z: z.clone(), v });
        }
        // Odometer increment, last coordinate fastest.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if z[k] < hi[k] {
                z[k] += 1;
                z[k + 1..n].copy_from_slice(&lo[k + 1..n]);
                break;
            }
        }
    }
}

/// `gcd` of a slice, with `gcd() = 0`.
pub fn gcd_all(xs: &[i64]) -> i64 {
    xs.iter().fold(0i64, |g, &x| g.gcd(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn m2(a: i64, b: i64, c: i64, d: i64) -> IntMatrix {
        IntMatrix::from_rows(&[vec![a, b], vec![c, d]]).unwrap()
    }

    /// Congruence mod `M Z^n` checked through the exact integer solve.
    fn congruent(m: &IntMatrix, x: &[i64], y: &[i64]) -> bool {
        let diff: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        m.solve_integer(&diff).unwrap().is_some()
    }

    #[test]
    fn determinants() {
        assert_eq!(det(&IntMatrix::diagonal(&[2, 3])), 6);
        assert_eq!(det(&m2(1, 3, 4, -1)), -13);
        assert_eq!(det(&IntMatrix::identity(3)), 1);
        assert_eq!(det(&m2(2, 4, 1, 2)), 0);
        let m = IntMatrix::from_rows(&[vec![0, 2, 1], vec![3, 0, 0], vec![1, 1, 5]]).unwrap();
        // Cofactor expansion along the second row: -3·(2·5 - 1·1).
        assert_eq!(det(&m), -27);
    }

    #[test]
    fn snf_examples() {
        assert_eq!(
            smith_normal_form(&IntMatrix::diagonal(&[2, 3]))
                .unwrap()
                .diag,
            vec![1, 6]
        );
        assert_eq!(
            smith_normal_form(&m2(1, 3, 4, -1)).unwrap().diag,
            vec![1, 13]
        );
        assert_eq!(
            smith_normal_form(&IntMatrix::scalar(7)).unwrap().diag,
            vec![7]
        );
        assert_eq!(
            smith_normal_form(&IntMatrix::scalar(-7)).unwrap().diag,
            vec![7]
        );
        assert_eq!(
            smith_normal_form(&m2(2, 4, 1, 2)),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn cycle_reps() {
        let reps = vertex_coset_reps(&IntMatrix::scalar(4)).unwrap();
        let zs: HashSet<i64> = reps.iter().map(|r| r.z[0].rem_euclid(4)).collect();
        assert_eq!(zs, HashSet::from([0, 1, 2, 3]));
        assert_eq!(reps[0].z, vec![0]);
    }

    #[test]
    fn skew_reps_against_box_search() {
        let m = m2(1, 3, 4, -1);
        let reps = vertex_coset_reps(&m).unwrap();
        assert_eq!(reps.len(), 13);
        // Exhaustive residue search over a box, deduplicated by congruence.
        let mut classes: Vec<Vec<i64>> = Vec::new();
        for a in -6..=6 {
            for b in -6..=6 {
                let x = vec![a, b];
                if !classes.iter().any(|c| congruent(&m, c, &x)) {
                    classes.push(x);
                }
            }
        }
        assert_eq!(classes.len(), 13);
        for c in &classes {
            assert_eq!(reps.iter().filter(|r| congruent(&m, &r.z, c)).count(), 1);
        }
    }

    #[test]
    fn dual_reps_examples() {
        let half = Rational::new(1, 2);
        let z = Rational::zero();
        let d = dual_coset_reps(&IntMatrix::scalar(2)).unwrap();
        let set: HashSet<_> = d.into_iter().collect();
        assert_eq!(set, HashSet::from([vec![z], vec![half]]));
        let d = dual_coset_reps(&IntMatrix::diagonal(&[2, 2])).unwrap();
        let set: HashSet<_> = d.into_iter().collect();
        assert_eq!(
            set,
            HashSet::from([vec![z, z], vec![half, z], vec![z, half], vec![half, half]])
        );
        let d = dual_coset_reps(&m2(1, 3, 4, -1)).unwrap();
        let set: HashSet<_> = d.iter().cloned().collect();
        assert_eq!(set.len(), 13);
        // Independent oracle: every element of (M^T)^{-1}Z^n mod 1 hit by a box search.
        let mt = m2(1, 3, 4, -1).transpose();
        let mut oracle = HashSet::new();
        for a in -13..=13 {
            for b in -13..=13 {
                let w = mt
                    .solve_rational(&[Rational::from_integer(a), Rational::from_integer(b)])
                    .unwrap();
                oracle.insert(w.into_iter().map(frac).collect::<Vec<_>>());
            }
        }
        assert_eq!(set, oracle);
    }

    #[test]
    fn ball_examples() {
        let id2 = DenseMatrix::<f64>::identity(2);
        let pts = enumerate_lattice_ball(&id2, 1.0, 100).unwrap();
        let zs: HashSet<Vec<i64>> = pts.into_iter().map(|p| p.z).collect();
        assert_eq!(
            zs,
            HashSet::from([vec![0, 0], vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]])
        );
        let id1 = DenseMatrix::<f64>::identity(1);
        let zs: Vec<i64> = enumerate_lattice_ball(&id1, 2.5, 100)
            .unwrap()
            .into_iter()
            .map(|p| p.z[0])
            .collect();
        assert_eq!(zs, vec![-2, -1, 0, 1, 2]);

        let a = m2(1, 3, 4, -1).to_f64();
        let got: HashSet<Vec<i64>> = enumerate_lattice_ball(&a, 3.0, 1000)
            .unwrap()
            .into_iter()
            .map(|p| p.z)
            .collect();
        let mut want = HashSet::new();
        for x in -10i64..=10 {
            for y in -10i64..=10 {
                let v = [x as f64 + 3.0 * y as f64, 4.0 * x as f64 - y as f64];
                if v[0] * v[0] + v[1] * v[1] <= 9.0 {
                    want.insert(vec![x, y]);
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn ball_cap_enforced() {
        let id = DenseMatrix::<f64>::identity(2);
        assert!(matches!(
            enumerate_lattice_ball(&id, 100.0, 50),
            Err(Error::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn shifted_ball_matches_filter() {
        let id = DenseMatrix::<f64>::identity(1);
        let got: Vec<i64> = enumerate_shifted_ball(&id, &[-0.5], 1.6, 100)
            .unwrap()
            .into_iter()
            .map(|p| p.z[0])
            .collect();
        // |z - 1/2| ≤ 1.6
        assert_eq!(got, vec![-1, 0, 1, 2]);
    }

    fn int_matrix() -> impl Strategy<Value = IntMatrix> {
        (1usize..=3).prop_flat_map(|n| {
            prop::collection::vec(-6i64..=6, n * n)
                .prop_map(move |e| IntMatrix { n, entries: e })
                .prop_filter("nonsingular, modest index", |m| {
                    let d = m.det().unsigned_abs();
                    d != 0 && d <= 400
                })
        })
    }

    proptest! {
        #[test]
        fn snf_is_valid(m in int_matrix()) {
            let snf = smith_normal_form(&m).unwrap();
            prop_assert_eq!(snf.u.mul(&m).unwrap().mul(&snf.v).unwrap(), snf.d());
            prop_assert_eq!(snf.u.det().abs(), 1);
            prop_assert_eq!(snf.v.det().abs(), 1);
            prop_assert_eq!(snf.diag.iter().product::<i64>() as u64, m.det().unsigned_abs());
            for w in snf.diag.windows(2) {
                prop_assert!(w[0] > 0 && w[1] % w[0] == 0);
            }
        }

        #[test]
        fn reps_are_complete_and_distinct(m in int_matrix()) {
            let reps = vertex_coset_reps(&m).unwrap();
            prop_assert_eq!(reps.len() as u64, m.det().unsigned_abs());
            for (a, ra) in reps.iter().enumerate() {
                prop_assert_eq!(ra.index, a);
                for rb in &reps[..a] {
                    prop_assert!(!congruent(&m, &ra.z, &rb.z));
                }
            }
        }

        #[test]
        fn classify_is_consistent(m in int_matrix(), x in prop::collection::vec(-50i64..50, 3)) {
            let idx = CosetIndexer::new(&m).unwrap();
            let x = &x[..m.dim()];
            let c = idx.classify(x).unwrap();
            prop_assert!(congruent(&m, x, &c.z));
            prop_assert_eq!(idx.rep(c.index).unwrap(), c.z);
        }

        #[test]
        fn dual_reps_are_dual(m in int_matrix()) {
            let reps = dual_coset_reps(&m).unwrap();
            prop_assert_eq!(reps.len() as u64, m.det().unsigned_abs());
            let mt = m.transpose();
            for w in &reps {
                for i in 0..m.dim() {
                    let s = (0..m.dim()).fold(Rational::zero(), |acc, j| acc + w[j] * mt.get(i, j));
                    prop_assert!(s.is_integer());
                }
                prop_assert!(w.iter().all(|x| *x >= Rational::zero() && *x < Rational::from_integer(1)));
            }
            let set: HashSet<_> = reps.iter().collect();
            prop_assert_eq!(set.len(), reps.len());
        }

        #[test]
        fn ball_is_symmetric(m in int_matrix(), r in 0.0f64..6.0) {
            let a = m.to_f64();
            let pts = match enumerate_lattice_ball(&a, r, 100_000) {
                Err(Error::RadiusTooLarge { .. }) => return Ok(()),
                other => other.unwrap(),
            };
            let set: HashSet<Vec<i64>> = pts.iter().map(|p| p.z.clone()).collect();
            for p in &pts {
                let neg: Vec<i64> = p.z.iter().map(|x| -x).collect();
                prop_assert!(set.contains(&neg));
            }
        }
    }
}
