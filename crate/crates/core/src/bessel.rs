//! Scaled modified Bessel functions `e^{-t} I_k(t)` of integer order and the
//! heat kernels of `Z^n` and of discrete tori built from them.
//!
//! `e^{-2t} I_m(2t)` is the law at time `t` of one coordinate of the
//! continuous-time simple random walk on `Z^n` (jump rate 1 in each of the
//! `2n` directions), which gives the certified truncation tails used here.

use std::f64::consts::PI;

use serde::Serialize;

use crate::lattice::{enumerate_shifted_ball, IntMatrix};
use crate::{Error, Result};

/// Below this argument the power series is used.
pub const SERIES_LIMIT: f64 = 20.0;
/// Above this argument the Hankel expansion is used (when it converges).
pub const ASYMPTOTIC_LIMIT: f64 = 1e4;

const RESCALE: f64 = 1e250;

/// `e^{-t} I_k(t)` for integer `k` (negative orders use `I_{-k} = I_k`).
pub fn scaled_bessel_i(k: i64, t: f64) -> f64 {
    assert!(
        t >= 0.0 && t.is_finite(),
        "argument must be finite and nonnegative"
    );
    let k = k.unsigned_abs();
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if t < SERIES_LIMIT {
        series(k, t)
    } else if t <= ASYMPTOTIC_LIMIT {
        miller(k, t)
    } else {
        hankel(k, t).unwrap_or_else(|| miller(k, t))
    }
}

fn series(k: u64, t: f64) -> f64 {
    let half = t / 2.0;
    let mut lead = (-t).exp();
    for m in 1..=k {
        lead *= half / m as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut m = 1.0;
    loop {
        term *= q / (m * (k as f64 + m));
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        m += 1.0;
    }
}

fn miller_start(k: u64, t: f64) -> u64 {
    let kf = k as f64;
    ((kf * kf + 80.0 * t).sqrt() + 20.0) as u64
}

/// Backward recurrence `y_{j-1} = y_{j+1} + (2j/t) y_j`, normalized by
/// `e^{-t}(I_0 + 2 Σ_{j≥1} I_j) = 1`. Returns the values for orders `0..=kmax`.
fn miller_table(kmax: u64, t: f64) -> Vec<f64> {
    let start = miller_start(kmax, t).max(kmax + 20);
    let mut out = vec![0.0; kmax as usize + 1];
    let mut y_next = 0.0;
    let mut y = 1.0;
    let mut sum = 2.0;
    for j in (1..=start).rev() {
        let y_prev = y_next + (2.0 * j as f64 / t) * y;
        y_next = y;
        y = y_prev;
        let order = j - 1;
        sum += if order == 0 { y } else { 2.0 * y };
        if order <= kmax {
            out[order as usize] = y;
        }
        if y > RESCALE {
            y /= RESCALE;
            y_next /= RESCALE;
            sum /= RESCALE;
            for v in out.iter_mut().skip(order as usize) {
                *v /= RESCALE;
            }
        }
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

fn miller(k: u64, t: f64) -> f64 {
    miller_table(k, t)[k as usize]
}

/// Hankel expansion `e^{-t}I_k(t) ~ (2πt)^{-1/2} Σ_m (-1)^m a_m(k)/t^m`;
/// `None` if the terms stop decreasing before reaching double precision.
fn hankel(k: u64, t: f64) -> Option<f64> {
    let mu = 4.0 * (k as f64) * (k as f64);
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        let odd = (2 * m - 1) as f64;
        let next = term * -(mu - odd * odd) / (8.0 * m as f64 * t);
        if next.abs() > term.abs() {
            return None;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return Some(sum / (2.0 * PI * t).sqrt());
        }
    }
    None
}

/// `e^{-t} I_k(t)` for all `k = 0..=kmax` at once.
pub fn scaled_bessel_table(kmax: u64, t: f64) -> Vec<f64> {
    assert!(
        t >= 0.0 && t.is_finite(),
        "argument must be finite and nonnegative"
    );
    if t == 0.0 {
        let mut v = vec![0.0; kmax as usize + 1];
        v[0] = 1.0;
        return v;
    }
    if !(SERIES_LIMIT..=ASYMPTOTIC_LIMIT).contains(&t) {
        // Keep regime-consistent values with the single-order evaluator.
        return (0..=kmax).map(|k| scaled_bessel_i(k as i64, t)).collect();
    }
    miller_table(kmax, t)
}

/// Two-term large-argument approximation `(2πt)^{-1/2}(1 - (4k²-1)/(8t))`.
pub fn two_term_asymptotic(k: i64, t: f64) -> f64 {
    let kf = k as f64;
    (1.0 - (4.0 * kf * kf - 1.0) / (8.0 * t)) / (2.0 * PI * t).sqrt()
}

/// Self-test of `I_{k+1} + I_{k-1} = 2 I_k'`, scaled by `e^{-t}`, with the
/// derivative from a central difference of step `1e-5`.
pub fn bessel_recurrence_residual(k: i64, t: f64) -> f64 {
    let h: f64 = 1e-5;
    let deriv =
        (h.exp() * scaled_bessel_i(k, t + h) - (-h).exp() * scaled_bessel_i(k, t - h)) / (2.0 * h);
    (scaled_bessel_i(k + 1, t) + scaled_bessel_i(k - 1, t) - 2.0 * deriv).abs()
}

/// Chernoff bound on `P(X ≥ m)` for the symmetric walk with total jump rate
/// `rate` (a difference of two independent Poisson(`rate/2`) variables).
pub fn walk_tail_bound(m: f64, rate: f64) -> f64 {
    if m <= 0.0 {
        return 1.0;
    }
    if rate == 0.0 {
        return 0.0;
    }
    let r = m / rate;
    (-m * r.asinh() + rate * ((1.0 + r * r).sqrt() - 1.0))
        .exp()
        .min(1.0)
}

/// Smallest `R` with `P(‖X_t‖_∞ > R) ≤ eps` for the walk on `Z^n` at time `t`.
pub fn walk_radius(n: usize, t: f64, eps: f64) -> u64 {
    // Exponential search, then bisection on the monotone bound.
    let bound = |r: u64| 2.0 * n as f64 * walk_tail_bound(r as f64 + 1.0, 2.0 * t);
    let mut hi = 1u64;
    while bound(hi) > eps {
        hi *= 2;
    }
    let mut lo = 0u64;
    if bound(0) <= eps {
        return 0;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `K^{Z^n}(t, x) = ∏_k e^{-2t} I_{x_k}(2t)`.
pub fn heat_kernel_zn(t: f64, x: &[i64]) -> f64 {
    x.iter().map(|&xk| scaled_bessel_i(xk, 2.0 * t)).product()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatKernelValue {
    pub t: f64,
    pub x: Vec<i64>,
    pub value: f64,
    /// Truncation box half-width in the sup norm.
    pub radius: u64,
    /// Certified upper bound on the omitted tail.
    pub tail_bound: f64,
}

/// Points cap for the heat-kernel lattice sum.
pub const HEAT_KERNEL_CAP: usize = 2_000_000;

/// `K^{DT}(t, x) = Σ_{v ∈ M Z^n} K^{Z^n}(t, x + v)`, truncated to
/// `‖x + v‖_∞ ≤ R` with a certified tail below `tail_eps`.
pub fn heat_kernel_dt(m: &IntMatrix, t: f64, x: &[i64], tail_eps: f64) -> Result<HeatKernelValue> {
    let n = m.dim();
    if x.len() != n || !(t > 0.0) || !(tail_eps > 0.0) {
        return Err(Error::InvalidInput(
            "heat kernel needs t > 0, eps > 0 and x of length n".into(),
        ));
    }
    m.index()?;
    let radius = walk_radius(n, t, tail_eps);
    let table = scaled_bessel_table(radius, 2.0 * t);
    let shift: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let pts = enumerate_shifted_ball(
        &m.to_f64(),
        &shift,
        radius as f64 * (n as f64).sqrt(),
        HEAT_KERNEL_CAP,
    )
    .map_err(|_| Error::TailNotCertified { eps: tail_eps })?;
    let r = radius as i64;
    let mut value = 0.0;
    for p in pts {
        let y: Vec<i64> = p.v.iter().map(|v| v.round() as i64).collect();
        if y.iter().all(|c| c.abs() <= r) {
            value += y
                .iter()
                .map(|c| table[c.unsigned_abs() as usize])
                .product::<f64>();
        }
    }
    Ok(HeatKernelValue {
        t,
        x: x.to_vec(),
        value,
        radius,
        tail_bound: 2.0 * n as f64 * walk_tail_bound(radius as f64 + 1.0, 2.0 * t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: direct series with running factorials, valid for
    /// moderate arguments.
    fn naive(k: u64, t: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = (t / 2.0).powi(k as i32) / (1..=k).map(|x| x as f64).product::<f64>();
        for m in 0..400 {
            if m > 0 {
                term *= (t / 2.0).powi(2) / (m as f64 * (k + m) as f64);
            }
            sum += term;
        }
        sum * (-t).exp()
    }

    #[test]
    fn special_values() {
        assert_eq!(scaled_bessel_i(0, 0.0), 1.0);
        assert_eq!(scaled_bessel_i(3, 0.0), 0.0);
        let want = (1.0 + 1.0 / 8000.0) / (2000.0 * PI).sqrt();
        assert!((scaled_bessel_i(0, 1000.0) / want - 1.0).abs() < 1e-5);
        assert_eq!(scaled_bessel_i(-4, 3.3), scaled_bessel_i(4, 3.3));
    }

    #[test]
    fn reference_values() {
        // e^{-1} I_0(1), e^{-2} I_1(2) and e^{-50} I_3(50) to 16 digits.
        let cases = [
            (0, 1.0, 0.46575960759364044),
            (1, 2.0, 0.21526928924893766),
            (3, 50.0, 0.05164737175755633),
        ];
        for (k, t, want) in cases {
            assert!(
                (scaled_bessel_i(k, t) / want - 1.0).abs() < 1e-13,
                "k={k} t={t}"
            );
        }
    }

    #[test]
    fn agrees_with_naive_series() {
        for &t in &[0.1, 1.0, 5.0, 19.9, 20.0, 35.0, 60.0] {
            for k in 0..25 {
                let a = scaled_bessel_i(k, t);
                let b = naive(k as u64, t);
                assert!((a / b - 1.0).abs() < 1e-12, "k={k} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn regime_boundaries_are_continuous() {
        for k in [0u64, 1, 5, 20] {
            let t = SERIES_LIMIT;
            let jump = (series(k, t) / miller(k, t) - 1.0).abs();
            assert!(jump < 1e-12, "k={k}: {jump}");
            let t = ASYMPTOTIC_LIMIT;
            let jump = (hankel(k, t).unwrap() / miller(k, t) - 1.0).abs();
            assert!(jump < 1e-12, "k={k}: {jump}");
        }
    }

    #[test]
    fn recurrence_examples() {
        assert!(bessel_recurrence_residual(1, 2.0) < 1e-8);
        assert!(bessel_recurrence_residual(0, 5.0) < 1e-8);
        assert!(bessel_recurrence_residual(3, 0.5) < 1e-8);
    }

    #[test]
    fn table_matches_pointwise() {
        for &t in &[0.3, 25.0, 400.0, 2e4] {
            let tab = scaled_bessel_table(30, t);
            for (k, v) in tab.iter().enumerate() {
                let p = scaled_bessel_i(k as i64, t);
                assert!(
                    (v - p).abs() <= 1e-14 * p.max(1e-300) + 1e-300,
                    "k={k} t={t}"
                );
            }
        }
    }

    #[test]
    fn heat_kernel_basics() {
        assert!((heat_kernel_zn(1e-12, &[0, 0]) - 1.0).abs() < 1e-11);
        assert_eq!(heat_kernel_zn(1.0, &[0]), scaled_bessel_i(0, 2.0));
        assert_eq!(heat_kernel_zn(0.7, &[1, 0]), heat_kernel_zn(0.7, &[0, 1]));
        let one = heat_kernel_dt(&IntMatrix::scalar(1), 1.3, &[0], 1e-14).unwrap();
        assert!((one.value - 1.0).abs() < 1e-10);
        let small = heat_kernel_dt(&IntMatrix::scalar(5), 1e-9, &[0], 1e-14).unwrap();
        assert!((small.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_cycle_heat_kernel() {
        // Spectral side: (1/2)(1 + e^{-4t}) for eigenvalues {0, 4}.
        let t = 0.5;
        let k = heat_kernel_dt(&IntMatrix::scalar(2), t, &[0], 1e-15).unwrap();
        let want = 0.5 * (1.0 + (-4.0 * t).exp());
        assert!((k.value - want).abs() < 1e-13);
        let skew = IntMatrix::from_rows(&[vec![1, 3], vec![4, -1]]).unwrap();
        let k = heat_kernel_dt(&skew, 0.8, &[2, -1], 1e-13).unwrap();
        assert!(k.value > 0.0 && k.value <= 1.0 && k.tail_bound <= 1e-13);
    }

    #[test]
    fn normalization_on_z() {
        for &t in &[0.1, 1.0, 10.0] {
            let r = walk_radius(1, t, 1e-13);
            let total: f64 = (-(r as i64)..=r as i64)
                .map(|x| heat_kernel_zn(t, &[x]))
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        for &t in &[0.2, 2.0, 15.0] {
            for m in [1i64, 3, 8, 20] {
                let tail: f64 = (m..m + 400).map(|x| heat_kernel_zn(t, &[x])).sum();
                assert!(
                    tail <= walk_tail_bound(m as f64, 2.0 * t) * (1.0 + 1e-12),
                    "t={t} m={m}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn decreasing_in_order(k in 0i64..20, t in prop::sample::select(vec![0.1, 1.0, 10.0, 100.0])) {
            let a = scaled_bessel_i(k, t);
            let b = scaled_bessel_i(k + 1, t);
            prop_assert!(b < a);
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(a <= scaled_bessel_i(0, t));
        }

        #[test]
        fn recurrence_holds(k in 0i64..15, t in 0.2f64..3e4) {
            prop_assert!(bessel_recurrence_residual(k, t) < 1e-8);
        }
    }
}
