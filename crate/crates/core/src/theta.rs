//! Theta functions `tr e^{-tL}` of both tori, each in a spectral form and an
//! independent dual-lattice form, plus the lattice inversion identity.
//!
//! Continuum:
//! * spectral `Σ_{w ∈ Γ^*} e^{-4π²|w + w̄_i|² t}`,
//! * dual `μ (4πt)^{-n/2} Σ_{z} e^{-|Az|²/4t} cos⟨z, ω_i⟩`.
//!
//! Discrete:
//! * spectral `Σ_w e^{-tλ_w}` over the `N` eigenvalues of fiber `i`,
//! * dual `μ Σ_{z} ∏_k e^{-2t} I_{(Mz)_k}(2t) · cos⟨z, ω_i⟩`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bessel::{scaled_bessel_table, walk_radius, walk_tail_bound};
use crate::lattice::{enumerate_shifted_ball, DEFAULT_ENUMERATION_CAP};
use crate::linalg::DenseMatrix;
use crate::torus::{DiscreteTorus, RealTorus};
use crate::{Error, Result};

/// Largest `|Σ sin|` tolerated in the dual sums before taking the cosine form.
pub const IMAGINARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaForm {
    Spectral,
    DualSum,
}

/// Which part of the bundle to trace over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Total,
    /// Fiber index, 0-based.
    Fiber(usize),
}

impl Component {
    fn fibers(self, d: usize) -> Result<std::ops::Range<usize>> {
        match self {
            Component::Total => Ok(0..d),
            Component::Fiber(i) if i < d => Ok(i..i + 1),
            Component::Fiber(i) => Err(Error::InvalidInput(format!(
                "fiber {i} out of range for rank {d}"
            ))),
        }
    }
}

/// A theta value split as `zero_modes + excess`.
///
/// Spectral forms count exact zero eigenvalues separately so that differences
/// of nearly equal values keep their precision; dual forms report
/// `zero_modes = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaValue {
    pub value: f64,
    pub zero_modes: usize,
    pub excess: f64,
    pub truncation_radius: f64,
    pub certified_tail: f64,
}

impl ThetaValue {
    fn from_parts(
        zero_modes: usize,
        excess: f64,
        truncation_radius: f64,
        certified_tail: f64,
    ) -> Self {
        Self {
            value: zero_modes as f64 + excess,
            zero_modes,
            excess,
            truncation_radius,
            certified_tail,
        }
    }

    /// `|self - other|` computed part by part.
    pub fn gap(&self, other: &ThetaValue) -> f64 {
        ((self.zero_modes as f64 - other.zero_modes as f64) + (self.excess - other.excess)).abs()
    }

    fn accumulate(&mut self, other: ThetaValue) {
        self.zero_modes += other.zero_modes;
        self.excess += other.excess;
        self.value = self.zero_modes as f64 + self.excess;
        self.truncation_radius = self.truncation_radius.max(other.truncation_radius);
        self.certified_tail += other.certified_tail;
    }
}

fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => unreachable!("dimension is capped at 4"),
    }
}

/// Covering radius proxy `ρ = ½ Σ_k |b_k|` of the fundamental cell.
fn cell_radius(basis: &DenseMatrix<f64>) -> f64 {
    0.5 * (0..basis.cols()).map(|k| basis.col_norm(k)).sum::<f64>()
}

/// Upper bound on `Σ_{|w| > R} e^{-a|w|²}` over a (possibly shifted) lattice
/// with the given basis columns, valid for `R ≥ 2ρ`.
///
/// Each omitted point is dominated by the integral of `e^{-a(|y|-ρ)²}` over
/// its cell, giving `(S_{n-1}/vol) ∫_{R-2ρ}^∞ e^{-as²}(s+ρ)^{n-1} ds`.
pub fn gaussian_lattice_tail(basis: &DenseMatrix<f64>, a: f64, radius: f64) -> f64 {
    let n = basis.rows();
    let rho = cell_radius(basis);
    let vol = basis.determinant().map(f64::abs).unwrap_or(0.0);
    if radius < 2.0 * rho || vol == 0.0 {
        return f64::INFINITY;
    }
    let l = radius - 2.0 * rho;
    let g = (-a * l * l).exp();
    let j0 = if l > 0.0 {
        (g / (2.0 * a * l)).min(0.5 * (PI / a).sqrt())
    } else {
        0.5 * (PI / a).sqrt()
    };
    let j = [
        j0,
        g / (2.0 * a),
        l * g / (2.0 * a) + j0 / (2.0 * a),
        (l * l + 1.0 / a) * g / (2.0 * a),
    ];
    let binom = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    let integral: f64 = (0..n)
        .map(|k| binom[n - 1][k] * j[k] * rho.powi((n - 1 - k) as i32))
        .sum();
    sphere_area(n) / vol * integral
}

/// Smallest radius (on a geometric grid) certifying the Gaussian tail.
pub fn gaussian_radius(basis: &DenseMatrix<f64>, a: f64, eps: f64) -> f64 {
    let mut r = 2.0 * cell_radius(basis);
    let step = 0.25 / a.sqrt();
    while gaussian_lattice_tail(basis, a, r) > eps {
        r += step + 0.02 * r;
    }
    r
}

fn check_t(t: f64, eps: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("theta needs t > 0, got {t}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(
            "tail tolerance must be positive".into(),
        ));
    }
    Ok(())
}

/// Theta function of the real torus.
pub fn theta_rt(
    torus: &RealTorus,
    component: Component,
    t: f64,
    form: ThetaForm,
    tail_eps: f64,
) -> Result<ThetaValue> {
    check_t(t, tail_eps)?;
    let fibers = component.fibers(torus.d())?;
    let per_fiber = tail_eps / fibers.len() as f64;
    let mut total = ThetaValue::from_parts(0, 0.0, 0.0, 0.0);
    for i in fibers {
        let v = match form {
            ThetaForm::Spectral => rt_spectral(torus, i, t, per_fiber)?,
            ThetaForm::DualSum => rt_dual(torus, i, t, per_fiber)?,
        };
        total.accumulate(v);
    }
    Ok(total)
}

fn rt_spectral(torus: &RealTorus, i: usize, t: f64, eps: f64) -> Result<ThetaValue> {
    let a = 4.0 * PI * PI * t;
    let basis = torus.dual_basis();
    let radius = gaussian_radius(basis, a, eps);
    let pts = enumerate_shifted_ball(
        basis,
        &torus.offsets().wbar[i],
        radius,
        DEFAULT_ENUMERATION_CAP,
    )
    .map_err(|_| Error::TailNotCertified { eps })?;
    let mut zero_modes = 0;
    let mut excess = 0.0;
    for p in pts {
        let r2: f64 = p.v.iter().map(|x| x * x).sum();
        if r2 == 0.0 {
            zero_modes += 1;
        } else {
            excess += (-a * r2).exp();
        }
    }
    Ok(ThetaValue::from_parts(
        zero_modes,
        excess,
        radius,
        gaussian_lattice_tail(basis, a, radius),
    ))
}

fn rt_dual(torus: &RealTorus, i: usize, t: f64, eps: f64) -> Result<ThetaValue> {
    let (origin, rest) = rt_dual_parts(torus, i, t, eps)?;
    Ok(ThetaValue::from_parts(
        0,
        origin + rest.excess,
        rest.truncation_radius,
        rest.certified_tail,
    ))
}

/// `Θ^i(t) - μ (4πt)^{-n/2}` from the dual sum with its origin term removed.
pub fn theta_rt_dual_excess(
    torus: &RealTorus,
    i: usize,
    t: f64,
    tail_eps: f64,
) -> Result<ThetaValue> {
    check_t(t, tail_eps)?;
    if i >= torus.d() {
        return Err(Error::InvalidInput(format!("fiber {i} out of range")));
    }
    Ok(rt_dual_parts(torus, i, t, tail_eps)?.1)
}

fn rt_dual_parts(torus: &RealTorus, i: usize, t: f64, eps: f64) -> Result<(f64, ThetaValue)> {
    let n = torus.n();
    let prefactor = torus.volume() / (4.0 * PI * t).powf(n as f64 / 2.0);
    let a = 1.0 / (4.0 * t);
    let basis = torus.matrix();
    let radius = gaussian_radius(basis, a, eps / prefactor);
    let zero = vec![0.0; n];
    let pts = enumerate_shifted_ball(basis, &zero, radius, DEFAULT_ENUMERATION_CAP)
        .map_err(|_| Error::TailNotCertified { eps })?;
    let omega = torus.phases().row(i);
    let (mut re, mut im) = (0.0, 0.0);
    for p in pts {
        if p.z.iter().all(|&z| z == 0) {
            continue;
        }
        let r2: f64 = p.v.iter().map(|x| x * x).sum();
        let g = (-a * r2).exp();
        let phase: f64 = p.z.iter().zip(omega).map(|(&z, &w)| z as f64 * w).sum();
        re += g * phase.cos();
        im += g * phase.sin();
    }
    if (prefactor * im).abs() > IMAGINARY_TOL {
        return Err(Error::InvalidInput(format!(
            "dual theta sum has imaginary part {:.3e}",
            prefactor * im
        )));
    }
    let rest = ThetaValue::from_parts(
        0,
        prefactor * re,
        radius,
        prefactor * gaussian_lattice_tail(basis, a, radius),
    );
    Ok((prefactor, rest))
}

/// Theta function of the discrete torus.
pub fn theta_dt(
    torus: &DiscreteTorus,
    component: Component,
    t: f64,
    form: ThetaForm,
    tail_eps: f64,
) -> Result<ThetaValue> {
    check_t(t, tail_eps)?;
    let fibers = component.fibers(torus.d())?;
    let per_fiber = tail_eps / fibers.len() as f64;
    let mut total = ThetaValue::from_parts(0, 0.0, 0.0, 0.0);
    for i in fibers {
        let v = match form {
            ThetaForm::Spectral => dt_spectral(torus, i, t),
            ThetaForm::DualSum => {
                let (origin, rest) = dt_dual_parts(torus, i, t, per_fiber)?;
                ThetaValue::from_parts(
                    0,
                    origin + rest.excess,
                    rest.truncation_radius,
                    rest.certified_tail,
                )
            }
        };
        total.accumulate(v);
    }
    Ok(total)
}

fn dt_spectral(torus: &DiscreteTorus, i: usize, t: f64) -> ThetaValue {
    let mut zero_modes = 0;
    let mut excess = 0.0;
    for lambda in torus.fiber_eigenvalues(i) {
        if lambda == 0.0 {
            zero_modes += 1;
        } else {
            excess += (-t * lambda).exp();
        }
    }
    ThetaValue::from_parts(zero_modes, excess, 0.0, 0.0)
}

/// `μ Σ_{z ≠ 0} ∏_k e^{-2t} I_{(Mz)_k}(2t) cos⟨z, ω_i⟩`: the discrete dual
/// theta of fiber `i` minus its origin term `μ (e^{-2t} I_0(2t))^n`.
pub fn theta_dt_dual_excess(
    torus: &DiscreteTorus,
    i: usize,
    t: f64,
    tail_eps: f64,
) -> Result<ThetaValue> {
    check_t(t, tail_eps)?;
    if i >= torus.d() {
        return Err(Error::InvalidInput(format!("fiber {i} out of range")));
    }
    Ok(dt_dual_parts(torus, i, t, tail_eps)?.1)
}

/// `μ K_n(t)` with `K_n(t) = (e^{-2t} I_0(2t))^n`.
pub fn origin_term(torus: &DiscreteTorus, t: f64) -> f64 {
    torus.volume() * crate::bessel::scaled_bessel_i(0, 2.0 * t).powi(torus.n() as i32)
}

fn dt_dual_parts(torus: &DiscreteTorus, i: usize, t: f64, eps: f64) -> Result<(f64, ThetaValue)> {
    let n = torus.n();
    let mu = torus.volume();
    let radius = walk_radius(n, t, eps / mu);
    let table = scaled_bessel_table(radius, 2.0 * t);
    let m = torus.matrix().to_f64();
    let zero = vec![0.0; n];
    let pts = enumerate_shifted_ball(
        &m,
        &zero,
        radius as f64 * (n as f64).sqrt(),
        DEFAULT_ENUMERATION_CAP,
    )
    .map_err(|_| Error::TailNotCertified { eps })?;
    let omega = torus.phases().row(i);
    let r = radius as f64;
    let (mut re, mut im) = (0.0, 0.0);
    let mut origin = 0.0;
    for p in pts {
        if p.v.iter().any(|x| x.abs() > r + 0.5) {
            continue;
        }
        let k: f64 =
            p.v.iter()
                .map(|x| table[x.abs().round() as usize])
                .product();
        if p.z.iter().all(|&z| z == 0) {
            origin = k;
            continue;
        }
        let phase: f64 = p.z.iter().zip(omega).map(|(&z, &w)| z as f64 * w).sum();
        re += k * phase.cos();
        im += k * phase.sin();
    }
    if (mu * im).abs() > IMAGINARY_TOL {
        return Err(Error::InvalidInput(format!(
            "dual theta sum has imaginary part {:.3e}",
            mu * im
        )));
    }
    let tail = mu * 2.0 * n as f64 * walk_tail_bound(r + 1.0, 2.0 * t);
    Ok((mu * origin, ThetaValue::from_parts(0, mu * re, r, tail)))
}

/// Both sides of `θ_Γ(t) = t^{-n/2} μ^{-1} θ_{Γ^*}(1/t)` with
/// `θ_Γ(t) = Σ_{x∈Γ} e^{-πt|x|²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionReport {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub certified_tail: f64,
}

/// Tail tolerance of each side in [`theta_inversion_check`].
pub const INVERSION_TAIL: f64 = 1e-13;

pub fn theta_inversion_check(a: &DenseMatrix<f64>, t: f64) -> Result<InversionReport> {
    check_t(t, INVERSION_TAIL)?;
    if !a.is_square() || a.rows() == 0 || a.rows() > crate::lattice::MAX_DIM {
        return Err(Error::InvalidInput(
            "period matrix must be square of dimension 1..=4".into(),
        ));
    }
    let n = a.rows();
    let mu = a.determinant()?.abs();
    if mu == 0.0 {
        return Err(Error::SingularMatrix);
    }
    let dual = a.transpose().inverse()?;
    let gauss_sum = |basis: &DenseMatrix<f64>, c: f64, eps: f64| -> Result<(f64, f64)> {
        let radius = gaussian_radius(basis, c, eps);
        let zero = vec![0.0; n];
        let pts = enumerate_shifted_ball(basis, &zero, radius, DEFAULT_ENUMERATION_CAP)
            .map_err(|_| Error::TailNotCertified { eps })?;
        let mut terms: Vec<f64> = pts
            .iter()
            .map(|p| (-c * p.v.iter().map(|x| x * x).sum::<f64>()).exp())
            .collect();
        terms.sort_by(f64::total_cmp);
        Ok((terms.iter().sum(), gaussian_lattice_tail(basis, c, radius)))
    };
    let (lhs, tail_l) = gauss_sum(a, PI * t, INVERSION_TAIL)?;
    let scale = t.powf(-(n as f64) / 2.0) / mu;
    let (dual_sum, tail_r) = gauss_sum(&dual, PI / t, INVERSION_TAIL / scale.max(1.0))?;
    let rhs = scale * dual_sum;
    Ok(InversionReport {
        t,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        certified_tail: tail_l + scale * tail_r,
    })
}

/// One row of a theta convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaConvergenceRow {
    pub u: u64,
    pub t: f64,
    /// `θ_{DT_u}(u² t)`.
    pub theta_dt_scaled: f64,
    pub theta_rt: f64,
    pub gap: f64,
}

/// Tail tolerance used by convergence tables.
pub const TABLE_TAIL: f64 = 1e-15;

/// Continuum form preferred at time `t`: spectral for `t ≥ 1`, dual below.
pub fn preferred_rt_form(t: f64) -> ThetaForm {
    if t >= 1.0 {
        ThetaForm::Spectral
    } else {
        ThetaForm::DualSum
    }
}

/// `|θ_{DT_u}(u² t) - Θ_{RT}(t)|` for each member of a family.
pub fn theta_convergence_table(
    rt: &RealTorus,
    family: &[(u64, DiscreteTorus)],
    component: Component,
    t: f64,
) -> Result<Vec<ThetaConvergenceRow>> {
    let cont = theta_rt(rt, component, t, preferred_rt_form(t), TABLE_TAIL)?;
    family
        .iter()
        .map(|(u, dt)| {
            let uf = *u as f64;
            let disc = theta_dt(dt, component, uf * uf * t, ThetaForm::Spectral, TABLE_TAIL)?;
            Ok(ThetaConvergenceRow {
                u: *u,
                t,
                theta_dt_scaled: disc.value,
                theta_rt: cont.value,
                gap: disc.gap(&cont),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{rotation, TorsionFamily};
    use crate::lattice::IntMatrix;
    use proptest::prelude::*;

    fn skew() -> IntMatrix {
        IntMatrix::from_rows(&[vec![1, 3], vec![4, -1]]).unwrap()
    }

    #[test]
    fn tail_bound_dominates() {
        // Compare the bound with the explicitly summed tail between R and 3R.
        for (rows, a, r) in [
            (vec![vec![1.0]], 2.0, 2.0),
            (vec![vec![1.0, 0.0], vec![0.0, 2.0]], 0.5, 4.0),
            (vec![vec![1.0, 3.0], vec![4.0, -1.0]], 0.1, 12.0),
        ] {
            let b = DenseMatrix::from_rows(&rows).unwrap();
            let zero = vec![0.0; b.rows()];
            let far = enumerate_shifted_ball(&b, &zero, 3.0 * r, 10_000_000).unwrap();
            let tail: f64 = far
                .iter()
                .map(|p| p.v.iter().map(|x| x * x).sum::<f64>())
                .filter(|&r2| r2 > r * r)
                .map(|r2| (-a * r2).exp())
                .sum();
            assert!(tail <= gaussian_lattice_tail(&b, a, r), "{tail}");
        }
    }

    #[test]
    fn circle_spectral_value() {
        let rt = RealTorus::trivial(DenseMatrix::identity(1), 1).unwrap();
        let v = theta_rt(&rt, Component::Total, 1.0, ThetaForm::Spectral, 1e-15).unwrap();
        let q = (-4.0 * PI * PI).exp();
        assert!((v.value - (1.0 + 2.0 * q + 2.0 * q.powi(4))).abs() < 1e-16);
        assert_eq!(v.zero_modes, 1);
    }

    #[test]
    fn continuum_forms_agree() {
        let rt = RealTorus::trivial(skew().to_f64(), 1).unwrap();
        for t in [0.05, 0.2, 1.0, 5.0] {
            let s = theta_rt(&rt, Component::Total, t, ThetaForm::Spectral, 1e-13).unwrap();
            let d = theta_rt(&rt, Component::Total, t, ThetaForm::DualSum, 1e-13).unwrap();
            assert!(
                (s.value - d.value).abs() < 1e-10,
                "t={t}: {} vs {}",
                s.value,
                d.value
            );
        }
        let tors = TorsionFamily::from_matrices(vec![rotation(0.7), rotation(-2.1)]).unwrap();
        let rt = RealTorus::new(skew().to_f64(), tors).unwrap();
        for t in [0.05, 1.0, 3.0] {
            for i in 0..2 {
                let s = theta_rt(&rt, Component::Fiber(i), t, ThetaForm::Spectral, 1e-13).unwrap();
                let d = theta_rt(&rt, Component::Fiber(i), t, ThetaForm::DualSum, 1e-13).unwrap();
                assert!((s.value - d.value).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn discrete_examples() {
        let two = DiscreteTorus::trivial(IntMatrix::scalar(2), 1).unwrap();
        let v = theta_dt(&two, Component::Total, 1.0, ThetaForm::Spectral, 1e-14).unwrap();
        assert!((v.value - (1.0 + (-4.0f64).exp())).abs() < 1e-15);
        let dt = DiscreteTorus::trivial(skew(), 1).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let s = theta_dt(&dt, Component::Total, t, ThetaForm::Spectral, 1e-13).unwrap();
            let d = theta_dt(&dt, Component::Total, t, ThetaForm::DualSum, 1e-13).unwrap();
            assert!((s.value - d.value).abs() < 1e-10, "t={t}");
        }
        let tiny = theta_dt(&dt, Component::Total, 1e-9, ThetaForm::Spectral, 1e-13).unwrap();
        assert!((tiny.value - 13.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_fiber_decays_only_without_zero_mode() {
        let rt = RealTorus::new(
            DenseMatrix::identity(1),
            TorsionFamily::from_phases(&[vec![PI]]).unwrap(),
        )
        .unwrap();
        let v = theta_rt(&rt, Component::Total, 30.0, ThetaForm::Spectral, 1e-15).unwrap();
        assert!(v.value < 1e-100);
    }

    #[test]
    fn inversion_examples() {
        for (rows, t) in [
            (vec![vec![1.0]], 1.0),
            (vec![vec![1.0, 0.0], vec![0.0, 2.0]], 0.7),
            (vec![vec![1.0, 3.0], vec![4.0, -1.0]], 2.0),
        ] {
            let a = DenseMatrix::from_rows(&rows).unwrap();
            let r = theta_inversion_check(&a, t).unwrap();
            assert!(r.residual < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn small_time_law() {
        let a = skew().to_f64();
        let rt = RealTorus::trivial(a, 1).unwrap();
        let t = 1e-3;
        let v = theta_rt(&rt, Component::Total, t, ThetaForm::DualSum, 1e-10).unwrap();
        let want = 13.0 / (4.0 * PI);
        assert!((t * v.value / want - 1.0).abs() < 0.01);
    }

    #[test]
    fn table_for_circle() {
        let rt = RealTorus::trivial(DenseMatrix::identity(1), 1).unwrap();
        let fam: Vec<(u64, DiscreteTorus)> = [4u64, 8, 16, 32]
            .iter()
            .map(|&u| {
                (
                    u,
                    DiscreteTorus::trivial(IntMatrix::scalar(u as i64), 1).unwrap(),
                )
            })
            .collect();
        let rows = theta_convergence_table(&rt, &fam, Component::Total, 1.0).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].gap < w[0].gap);
        }
        assert!(rows[3].gap < 1e-6);
    }

    proptest! {
        #[test]
        fn fibers_sum_to_total(a in -3.0f64..3.0, b in -3.0f64..3.0, t in 0.05f64..5.0) {
            let tors = TorsionFamily::from_phases(&[vec![a, b], vec![0.0, b], vec![PI, -a]]).unwrap();
            let dt = DiscreteTorus::new(IntMatrix::from_rows(&[vec![3, 1], vec![1, 4]]).unwrap(), tors).unwrap();
            let total = theta_dt(&dt, Component::Total, t, ThetaForm::Spectral, 1e-14).unwrap().value;
            let parts: f64 = (0..3).map(|i| theta_dt(&dt, Component::Fiber(i), t, ThetaForm::Spectral, 1e-14).unwrap().value).sum();
            prop_assert!((total - parts).abs() < 1e-12);
            let dual = theta_dt(&dt, Component::Total, t, ThetaForm::DualSum, 1e-13).unwrap().value;
            prop_assert!((total - dual).abs() < 1e-10);
        }

        #[test]
        fn nonincreasing_in_t(t in 0.01f64..5.0, dt_step in 0.001f64..1.0) {
            let rt = RealTorus::new(skew().to_f64(), TorsionFamily::from_phases(&[vec![0.3, 1.0]]).unwrap()).unwrap();
            let f = |t: f64| theta_rt(&rt, Component::Total, t, preferred_rt_form(t), 1e-14).unwrap().value;
            prop_assert!(f(t) > 0.0);
            prop_assert!(f(t + dt_step) <= f(t) * (1.0 + 1e-12));
        }
    }
}
