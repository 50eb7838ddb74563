//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances of the log-time quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Breakpoint in `t`; the log-time domain is split there.
    pub split_point: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
            split_point: 1.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.split_point > 0.0
            && self.max_subdivisions > 0)
        {
            return Err(Error::InvalidInput(
                "quadrature tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    /// Sum of the per-interval `|Kronrod - Gauss|` estimates.
    pub error: T,
    pub intervals: usize,
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Piece<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = radius * T::lit(XGK[i]);
        let s = f(center - dx) + f(center + dx);
        k = k + s * T::lit(WGK[i]);
        if i % 2 == 1 {
            g = g + s * T::lit(WG[i / 2]);
        }
    }
    Piece {
        a,
        b,
        value: k * radius,
        error: ((k - g) * radius).abs(),
    }
}

/// `∫_a^b f` to `max(abs_tol, rel_tol·|I|)`, bisecting the worst interval.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_subdivisions: usize,
) -> Result<Integral<T>> {
    if a == b {
        return Ok(Integral {
            value: T::zero(),
            error: T::zero(),
            intervals: 0,
        });
    }
    let first = kronrod(&mut f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    while !(error <= abs_tol.max(rel_tol * value.abs())) {
        if !value.is_finite() {
            return Err(Error::QuadratureNotConverged {
                error: f64::INFINITY,
                tolerance: abs_tol.to_f64().unwrap_or(0.0),
            });
        }
        if heap.len() >= max_subdivisions {
            return Err(Error::QuadratureNotConverged {
                error: error.to_f64().unwrap_or(f64::NAN),
                tolerance: abs_tol
                    .max(rel_tol * value.abs())
                    .to_f64()
                    .unwrap_or(f64::NAN),
            });
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = T::lit(0.5) * (worst.a + worst.b);
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        value = value - worst.value + left.value + right.value;
        error = error - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        // Re-sum occasionally to shed accumulated cancellation error.
        if heap.len() % 64 == 0 {
            value = heap.iter().fold(T::zero(), |s, p| s + p.value);
            error = heap.iter().fold(T::zero(), |s, p| s + p.error);
        }
    }
    let value = heap.iter().fold(T::zero(), |s, p| s + p.value);
    Ok(Integral {
        value,
        error,
        intervals: heap.len(),
    })
}

/// `∫_{t0}^{t1} g(t) dt/t` in log-time `x = ln t`, split at `cfg.split_point`.
pub fn integrate_dt_over_t<F: FnMut(f64) -> f64>(
    mut g: F,
    t0: f64,
    t1: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral<f64>> {
    cfg.validate()?;
    if !(t0 > 0.0 && t1 > t0) {
        return Err(Error::InvalidInput(format!(
            "log-time range [{t0}, {t1}] is empty"
        )));
    }
    let (x0, x1) = (t0.ln(), t1.ln());
    let xs = cfg.split_point.ln();
    let mut pieces = vec![];
    if xs > x0 && xs < x1 {
        pieces.push((x0, xs));
        pieces.push((xs, x1));
    } else {
        pieces.push((x0, x1));
    }
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for (a, b) in pieces {
        let part = integrate(
            |x: f64| g(x.exp()),
            a,
            b,
            cfg.abs_tol / 2.0,
            cfg.rel_tol,
            cfg.max_subdivisions,
        )?;
        total.value += part.value;
        total.error += part.error;
        total.intervals += part.intervals;
    }
    Ok(total)
}
