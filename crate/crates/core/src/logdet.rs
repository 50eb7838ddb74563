//! Regularized log-determinants.
//!
//! Discrete: `Σ log λ = μ d I_n(0) + Σ_i H^i(0)` with
//! `I_n(s) = -∫_0^∞ (e^{-s²t} K_n(t) - e^{-t}) dt/t`, `K_n(t) = (e^{-2t} I_0(2t))^n`
//! and `H^i(s) = -∫_0^∞ e^{-s²t} (θ^i(t) - μ K_n(t)) dt/t`.
//!
//! Continuum: `log det* = -Σ_i ζ_i'(0)` from the split Mellin integral of `Θ^i`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bessel::scaled_bessel_i;
use crate::lattice::{enumerate_shifted_ball, DEFAULT_ENUMERATION_CAP};
use crate::quadrature::{integrate_dt_over_t, Integral, QuadratureConfig};
use crate::theta::{theta_dt_dual_excess, theta_rt, theta_rt_dual_excess, Component, ThetaForm};
use crate::torus::{DiscreteTorus, RealTorus};
use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Lower cutoff of the discrete integrals; the omitted piece is added analytically.
const T_LO: f64 = 1e-10;
/// Upper cutoff for `K_n`; beyond it the two-term large-time expansion is integrated.
const T_HI: f64 = 1e6;
/// Truncation tolerance of each theta evaluation inside a quadrature.
const THETA_EPS: f64 = 1e-14;
/// Agreement required between the two forms of `I_n(0)`.
pub const IN0_CROSS_TOL: f64 = 1e-9;
/// `χ = 0` iff `u ‖w̄‖_∞` falls below this (with relative slack `1e-9`).
pub const CHI_THRESHOLD: f64 = 0.5;

/// `K_n(t) = (e^{-2t} I_0(2t))^n`.
pub fn k_n(n: usize, t: f64) -> f64 {
    scaled_bessel_i(0, 2.0 * t).powi(n as i32)
}

/// `∫_T^∞ K_n(t) dt/t` from `K_n(t) ≈ (4πt)^{-n/2}(1 + n/(16t))`.
fn k_n_tail(n: usize, t: f64) -> f64 {
    let h = n as f64 / 2.0;
    (4.0 * PI).powf(-h) * (t.powf(-h) / h + n as f64 / 16.0 * t.powf(-h - 1.0) / (h + 1.0))
}

/// Runs `integrate_dt_over_t` on a fallible integrand.
fn integrate_fallible<F: FnMut(f64) -> Result<f64>>(
    mut g: F,
    t0: f64,
    t1: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral<f64>> {
    let mut failure = None;
    let r = integrate_dt_over_t(
        |t| match g(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        t0,
        t1,
        cfg,
    );
    match failure {
        Some(e) => Err(e),
        None => r,
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > crate::lattice::MAX_DIM {
        return Err(Error::InvalidInput(format!("dimension {n} outside 1..=4")));
    }
    Ok(())
}

/// `I_n(s) = -∫_0^∞ (e^{-s²t} K_n(t) - e^{-t}) dt/t`.
pub fn in_s(s: f64, n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    check_dim(n)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!("I_n needs s >= 0, got {s}")));
    }
    let s2 = s * s;
    let t_hi = if s == 0.0 {
        T_HI
    } else {
        (60.0 / s2).max(60.0)
    };
    let body = integrate_dt_over_t(
        |t| (-t).exp() - (-s2 * t).exp() * k_n(n, t),
        T_LO,
        t_hi,
        cfg,
    )?;
    // Near 0 the integrand is `(1 - s² - 2n) t`.
    let head = -T_LO * (1.0 - s2 - 2.0 * n as f64);
    let tail = if s == 0.0 { -k_n_tail(n, t_hi) } else { 0.0 };
    Ok(body.value + head + tail)
}

/// `log 2n - ∫_0^∞ e^{-2nt} (I_0(2t)^n - 1) dt/t`, the Frullani rewrite of `I_n(0)`.
pub fn in0_frullani(n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    check_dim(n)?;
    let nf = n as f64;
    let body = integrate_dt_over_t(|t| k_n(n, t) - (-2.0 * nf * t).exp(), T_LO, T_HI, cfg)?;
    // Near 0 the integrand is `n t²`.
    let head = nf * T_LO * T_LO / 2.0;
    Ok((2.0 * nf).ln() - (body.value + head + k_n_tail(n, T_HI)))
}

/// `I_n(0)`, cross-checked against [`in0_frullani`].
pub fn in0(n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    let a = in_s(0.0, n, cfg)?;
    let b = in0_frullani(n, cfg)?;
    if (a - b).abs() > IN0_CROSS_TOL {
        return Err(Error::CrossCheckFailed {
            quantity: format!("I_{n}(0)"),
            left: a,
            right: b,
        });
    }
    Ok(a)
}

/// A quadrature result together with its estimated error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadValue {
    pub value: f64,
    pub error: f64,
}

/// Time after which the discrete integrands switch from the dual to the spectral theta.
fn dt_switch(torus: &DiscreteTorus) -> f64 {
    let l = torus.shortest_period();
    (l * l / 16.0).max(1.0)
}

fn hi_integral(
    torus: &DiscreteTorus,
    i: usize,
    s: f64,
    cfg: &QuadratureConfig,
    drop_first: bool,
) -> Result<QuadValue> {
    if i >= torus.d() {
        return Err(Error::InvalidInput(format!("fiber {i} out of range")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!("H needs s >= 0, got {s}")));
    }
    let n = torus.n();
    let mu = torus.volume();
    let s2 = s * s;
    let all = torus.fiber_eigenvalues(i);
    let lambda0 = all[0];
    let mut kept: Vec<f64> = if drop_first { all[1..].to_vec() } else { all };
    kept.sort_by(|a, b| b.total_cmp(a));
    let lambda_min = kept.last().copied().unwrap_or(f64::INFINITY);
    if lambda_min <= 0.0 {
        return Err(Error::DegenerateTorsion(i));
    }
    // Dropped mode and its Frullani partner: `e^{-t} - e^{-λ0 t}`.
    let correction = |t: f64| {
        if drop_first {
            (-t).exp_m1() - (-lambda0 * t).exp_m1()
        } else {
            0.0
        }
    };

    let t_sw = dt_switch(torus);
    let mut t_hi = T_HI.max(50.0 / lambda_min);
    if s > 0.0 {
        t_hi = t_hi.max(60.0 / s2);
    }
    let small = integrate_fallible(
        |t| {
            let q = theta_dt_dual_excess(torus, i, t, THETA_EPS)?.excess + correction(t);
            Ok(-(-s2 * t).exp() * q)
        },
        T_LO,
        t_sw,
        cfg,
    )?;
    let large = integrate_fallible(
        |t| {
            let theta: f64 = kept.iter().map(|&l| (-l * t).exp()).sum();
            let q = theta - mu * k_n(n, t) + if drop_first { (-t).exp() } else { 0.0 };
            Ok(-(-s2 * t).exp() * q)
        },
        t_sw,
        t_hi,
        cfg,
    )?;
    let head = if drop_first {
        -(lambda0 - 1.0) * T_LO
    } else {
        0.0
    };
    let tail = if s == 0.0 {
        mu * k_n_tail(n, t_hi)
    } else {
        0.0
    };
    Ok(QuadValue {
        value: small.value + large.value + head + tail,
        error: small.error + large.error,
    })
}

/// `H^i(s)` for a fiber without a zero mode.
pub fn hi_s(torus: &DiscreteTorus, i: usize, s: f64, cfg: &QuadratureConfig) -> Result<QuadValue> {
    if i < torus.d() && torus.phases().is_zero_row(i) {
        return Err(Error::DegenerateTorsion(i));
    }
    hi_integral(torus, i, s, cfg, false)
}

pub fn hi0(torus: &DiscreteTorus, i: usize, cfg: &QuadratureConfig) -> Result<QuadValue> {
    hi_s(torus, i, 0.0, cfg)
}

/// `H^i(s)` with the mode `λ(w̄_i)` removed:
/// `-∫_0^∞ (e^{-s²t}(θ^i - μK_n - e^{-λ(w̄_i)t}) + e^{-t}) dt/t`.
///
/// For `w̄_i = 0` the removed mode is the zero eigenvalue.
pub fn hi_degenerate_s(
    torus: &DiscreteTorus,
    i: usize,
    s: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadValue> {
    if s != 0.0 {
        // The `e^{-t}` partner only balances the dropped mode at s = 0.
        return Err(Error::InvalidInput(
            "degenerate variant is implemented at s = 0".into(),
        ));
    }
    hi_integral(torus, i, s, cfg, true)
}

pub fn hi0_degenerate(
    torus: &DiscreteTorus,
    i: usize,
    cfg: &QuadratureConfig,
) -> Result<QuadValue> {
    hi_degenerate_s(torus, i, 0.0, cfg)
}

/// `χ(w̄_i(u))`: 0 if the offset is below the `1/u` scale.
pub fn chi_flag(torus: &DiscreteTorus, i: usize, u_scale: Option<f64>) -> u8 {
    if torus.phases().is_zero_row(i) {
        return 0;
    }
    match u_scale {
        Some(u) if u * torus.offsets().sup_norm(i) < CHI_THRESHOLD * (1.0 - 1e-9) => 0,
        _ => 1,
    }
}

/// Discrete and continuum log-determinant data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogDetReport {
    pub direct_sum: f64,
    #[serde(rename = "In0")]
    pub in0: f64,
    #[serde(rename = "Hi0")]
    pub hi0: Vec<f64>,
    pub reconstructed: f64,
    pub zeta_prime: Vec<f64>,
    pub chi: Vec<u8>,
    /// `|direct_sum - reconstructed|`.
    pub discrepancy: f64,
    /// Sum of the quadrature error estimates behind `reconstructed`.
    pub quadrature_error: f64,
}

/// Log-determinant of the discrete connection Laplacian, both directly and
/// through the `I_n`/`H^i` decomposition. `u_scale` sets the χ rule; without
/// it only exactly vanishing offsets are treated as degenerate.
pub fn logdet_dt(
    torus: &DiscreteTorus,
    cfg: &QuadratureConfig,
    u_scale: Option<f64>,
) -> Result<LogDetReport> {
    cfg.validate()?;
    let in0_value = in0(torus.n(), cfg)?;
    let mu = torus.volume();
    let mut direct_sum = 0.0;
    let mut reconstructed = 0.0;
    let mut quadrature_error = 0.0;
    let mut hi = Vec::with_capacity(torus.d());
    let mut chi = Vec::with_capacity(torus.d());
    for i in 0..torus.d() {
        let flag = chi_flag(torus, i, u_scale);
        let eig = torus.fiber_eigenvalues(i);
        let retained = if flag == 0 { &eig[1..] } else { &eig[..] };
        direct_sum += retained.iter().map(|l| l.ln()).sum::<f64>();
        let h = if flag == 0 {
            hi0_degenerate(torus, i, cfg)?
        } else {
            hi0(torus, i, cfg)?
        };
        reconstructed += mu * in0_value + h.value;
        quadrature_error += h.error;
        hi.push(h.value);
        chi.push(flag);
    }
    Ok(LogDetReport {
        direct_sum,
        in0: in0_value,
        hi0: hi,
        reconstructed,
        zeta_prime: vec![],
        chi,
        discrepancy: (direct_sum - reconstructed).abs(),
        quadrature_error,
    })
}

/// Shortest nonzero vector length of `AZ^n` (searched within the shortest column).
fn shortest_vector(torus: &RealTorus) -> Result<f64> {
    let a = torus.matrix();
    let r = (0..a.cols())
        .map(|j| a.col_norm(j))
        .fold(f64::INFINITY, f64::min);
    let zero = vec![0.0; torus.n()];
    let pts = enumerate_shifted_ball(a, &zero, r * (1.0 + 1e-12), DEFAULT_ENUMERATION_CAP)?;
    Ok(pts
        .iter()
        .filter(|p| p.z.iter().any(|&z| z != 0))
        .map(|p| p.v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(r, f64::min))
}

/// `ζ_i'(0)` of the continuum fiber `i`.
///
/// `∫_1^∞ (Θ^i - z) dt/t + ∫_0^1 (Θ^i - μ(4πt)^{-n/2}) dt/t - 2μ/(n(4π)^{n/2}) - zγ`
/// where `z ∈ {0, 1}` counts the zero mode of the fiber.
pub fn zeta_prime_rt(torus: &RealTorus, i: usize, cfg: &QuadratureConfig) -> Result<QuadValue> {
    cfg.validate()?;
    if i >= torus.d() {
        return Err(Error::InvalidInput(format!("fiber {i} out of range")));
    }
    let n = torus.n();
    let c = torus.volume() * (4.0 * PI).powf(-(n as f64) / 2.0);
    let zero_modes = theta_rt(
        torus,
        Component::Fiber(i),
        1.0,
        ThetaForm::Spectral,
        THETA_EPS,
    )?
    .zero_modes;

    let spectral_excess = |t: f64| -> Result<f64> {
        Ok(theta_rt(
            torus,
            Component::Fiber(i),
            t,
            ThetaForm::Spectral,
            THETA_EPS,
        )?
        .excess)
    };
    let mut t_hi = 2.0;
    while spectral_excess(t_hi)? > 1e-20 {
        t_hi *= 2.0;
    }
    let upper = integrate_fallible(spectral_excess, 1.0, t_hi, cfg)?;

    let l = shortest_vector(torus)?;
    let t_lo = (l * l / 400.0).min(0.5);
    let lower = integrate_fallible(
        |t| Ok(theta_rt_dual_excess(torus, i, t, THETA_EPS)?.excess),
        t_lo,
        1.0,
        cfg,
    )?;

    let value = upper.value + lower.value - 2.0 * c / n as f64 - zero_modes as f64 * EULER_GAMMA;
    Ok(QuadValue {
        value,
        error: upper.error + lower.error,
    })
}

/// `ζ_i'(0)` for every fiber.
pub fn zeta_primes(torus: &RealTorus, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    (0..torus.d())
        .map(|i| Ok(zeta_prime_rt(torus, i, cfg)?.value))
        .collect()
}

/// `log det* L = -Σ_i ζ_i'(0)`.
pub fn logdet_rt(torus: &RealTorus, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(-zeta_primes(torus, cfg)?.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{rotation, TorsionFamily};
    use crate::lattice::IntMatrix;
    use crate::linalg::DenseMatrix;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn cycle(n: i64, omega: f64) -> DiscreteTorus {
        DiscreteTorus::new(
            IntMatrix::scalar(n),
            TorsionFamily::from_phases(&[vec![omega]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn in0_values() {
        let c = cfg();
        assert!(in0(1, &c).unwrap().abs() < 1e-9);
        assert!((in0(2, &c).unwrap() - 1.166_243_616_123_275_1).abs() < 1e-9);
        assert!((in0(3, &c).unwrap() - 1.673_389_302_970_196_7).abs() < 1e-9);
    }

    #[test]
    fn in_s_one_dimensional_closed_form() {
        // I_1(s) = 2 asinh(s/2).
        for s in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let got = in_s(s, 1, &cfg()).unwrap();
            assert!((got - 2.0 * (s / 2.0).asinh()).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn in_s_large_s_expansion() {
        // I_n(s) = log s² + 2n/s² - (2n² + n)/s⁴ + O(s^{-6}).
        for n in 1..=3usize {
            let nf = n as f64;
            for s in [10.0f64, 30.0] {
                let got = in_s(s, n, &cfg()).unwrap();
                let approx = (s * s).ln() + 2.0 * nf / (s * s) - (2.0 * nf * nf + nf) / s.powi(4);
                assert!((got - approx).abs() < 300.0 / s.powi(6), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn antiperiodic_triangle() {
        let dt = cycle(3, PI);
        let h = hi0(&dt, 0, &cfg()).unwrap();
        assert!((3.0 * in0(1, &cfg()).unwrap() + h.value - 4f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn degenerate_cycles() {
        for n in [2i64, 8, 32] {
            let dt = cycle(n, 0.0);
            assert!(matches!(
                hi0(&dt, 0, &cfg()),
                Err(Error::DegenerateTorsion(0))
            ));
            let r = logdet_dt(&dt, &cfg(), None).unwrap();
            assert_eq!(r.chi, vec![0]);
            let want = 2.0 * (n as f64).ln();
            assert!(
                (r.reconstructed - want).abs() < 1e-6,
                "N={n}: {}",
                r.reconstructed
            );
            assert!((r.direct_sum - want).abs() < 1e-10);
        }
    }

    #[test]
    fn antiperiodic_four_cycle() {
        let dt = cycle(4, PI);
        let r = logdet_dt(&dt, &cfg(), Some(4.0)).unwrap();
        let direct: f64 = (0..4)
            .map(|k| (4.0 * (PI * (k as f64 + 0.5) / 4.0).sin().powi(2)).ln())
            .sum();
        assert_eq!(r.chi, vec![1]);
        assert!((r.reconstructed - direct).abs() < 1e-6);
    }

    #[test]
    fn two_dimensional_square() {
        let dt = DiscreteTorus::trivial(IntMatrix::diagonal(&[2, 2]), 1).unwrap();
        let r = logdet_dt(&dt, &cfg(), None).unwrap();
        assert!(r.discrepancy < 1e-5, "{r:?}");
        // Nonzero spectrum of the 2x2 torus is {4, 4, 8}.
        assert!((r.direct_sum - (32f64).ln() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn h_vanishes_for_large_s() {
        let dt = cycle(5, 1.0);
        for s in [10.0, 30.0] {
            assert!(hi_s(&dt, 0, s, &cfg()).unwrap().value.abs() < 1e-3);
        }
    }

    #[test]
    fn circle_determinants() {
        let c = cfg();
        let circle = RealTorus::trivial(DenseMatrix::identity(1), 1).unwrap();
        assert!(logdet_rt(&circle, &c).unwrap().abs() < 1e-6);
        let anti = RealTorus::new(
            DenseMatrix::identity(1),
            TorsionFamily::from_phases(&[vec![PI]]).unwrap(),
        )
        .unwrap();
        assert!((logdet_rt(&anti, &c).unwrap() - 4f64.ln()).abs() < 1e-6);
        let flip = RealTorus::new(
            DenseMatrix::identity(1),
            TorsionFamily::from_matrices(vec![rotation(PI)]).unwrap(),
        )
        .unwrap();
        assert!((logdet_rt(&flip, &c).unwrap() - 2.0 * 4f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn kronecker_limit_for_square_torus() {
        // log det* of the flat unit square torus.
        let sq = RealTorus::trivial(DenseMatrix::identity(2), 1).unwrap();
        let got = logdet_rt(&sq, &cfg()).unwrap();
        assert!((got - -1.054_688_280_995_671_9).abs() < 1e-7, "{got}");
    }

    #[test]
    fn trivial_bundle_is_linear_in_rank() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.3], vec![0.0, 1.2]]).unwrap();
        let one = logdet_rt(&RealTorus::trivial(a.clone(), 1).unwrap(), &cfg()).unwrap();
        let three = logdet_rt(&RealTorus::trivial(a, 3).unwrap(), &cfg()).unwrap();
        assert!((three - 3.0 * one).abs() < 1e-12);
    }

    #[test]
    fn report_field_names() {
        let r = logdet_dt(&cycle(3, PI), &cfg(), None).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "direct_sum",
            "In0",
            "Hi0",
            "reconstructed",
            "zeta_prime",
            "chi",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
