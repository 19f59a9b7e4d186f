//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and infinite intervals.
//!
//! Infinite ends are mapped onto a bounded variable with a rational
//! substitution; panels with the largest error estimate are bisected until the
//! total estimate meets the tolerance.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, math::abs((kronrod - gauss) * half))
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let (value, error) = gauss_kronrod(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    while total_err > cfg.abs_tol.max(cfg.rel_tol * math::abs(total)) {
        if !total.is_finite() || heap.len() >= cfg.max_panels {
            return Err(Error::Quadrature {
                a,
                b,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature {
                a,
                b,
                error: total_err,
            });
        }
        let (lv, le) = gauss_kronrod(f, worst.a, mid);
        let (rv, re) = gauss_kronrod(f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    // Re-sum to drop drift from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature { a, b, error });
    }
    Ok(Estimate { value, error })
}

/// `∫_a^b f(x) dx`; either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::Quadrature {
            a,
            b,
            error: f64::NAN,
        });
    }
    if a > b {
        let e = integrate(f, b, a, cfg)?;
        return Ok(Estimate {
            value: -e.value,
            error: e.error,
        });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, cfg),
        (true, false) => {
            // x = a + t / (1 - t), t ∈ [0, 1)
            let g = |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, cfg)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, cfg)
        }
        (false, false) => {
            // x = t / (1 - t²), t ∈ (-1, 1)
            let g = |t: f64| {
                let s = 1.0 - t * t;
                f(t / s) * (1.0 + t * t) / (s * s)
            };
            adaptive(&g, -1.0, 1.0, cfg)
        }
    }
}

/// Integrates piecewise over `[a, b]`, splitting at every break point inside it.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(a);
    edges.extend(points);
    edges.push(b);
    let mut out = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for w in edges.windows(2) {
        let e = integrate(&f, w[0], w[1], cfg)?;
        out.value += e.value;
        out.error += e.error;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(
            |x| x * x * x - 2.0 * x,
            0.0,
            2.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!((e.value - 0.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_mass_and_moments() {
        let cfg = QuadratureConfig::default();
        let total = integrate(math::normal_pdf, f64::NEG_INFINITY, f64::INFINITY, &cfg).unwrap();
        assert!((total.value - 1.0).abs() < 1e-12);
        let half = integrate(|x| x * math::normal_pdf(x), 0.0, f64::INFINITY, &cfg).unwrap();
        assert!((half.value - 1.0 / (2.0 * core::f64::consts::PI).sqrt()).abs() < 1e-12);
        let left = integrate(math::normal_pdf, f64::NEG_INFINITY, -1.0, &cfg).unwrap();
        assert!((left.value - math::normal_cdf(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn kink_handled_with_breaks() {
        let cfg = QuadratureConfig::default();
        let e = integrate_with_breaks(|x: f64| (x - 0.3).abs(), -1.0, 1.0, &[0.3], &cfg).unwrap();
        assert!((e.value - (1.3f64.powi(2) + 0.7f64.powi(2)) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let cfg = QuadratureConfig::default();
        let e = integrate(|x| x, 1.0, 0.0, &cfg).unwrap();
        assert!((e.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn divergent_integral_fails() {
        let cfg = QuadratureConfig::default();
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, &cfg).is_err());
    }
}
