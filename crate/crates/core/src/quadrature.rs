//! Globally adaptive Gauss–Kronrod (7/15) integration.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 200_000;

/// Values an integrand may return.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

struct Segment<T> {
    lo: f64,
    hi: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod<T: QuadValue, F: Fn(f64) -> T>(f: &F, lo: f64, hi: f64) -> Segment<T> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        k = k + pair * WGK[j];
        if j % 2 == 1 {
            g = g + pair * WG[j / 2];
        }
    }
    let value = k * half;
    let err = (value - g * half).magnitude();
    Segment { lo, hi, value, err }
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`, starting from
/// `pieces` equal subintervals (use more for oscillatory integrands).
pub fn integrate_with<T, F>(f: F, lo: f64, hi: f64, tol: f64, pieces: usize) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if hi <= lo {
        return Ok(T::zero());
    }
    let pieces = pieces.clamp(1, MAX_INTERVALS / 2);
    let width = (hi - lo) / pieces as f64;
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    let mut total_err = 0.0;
    for i in 0..pieces {
        let a = lo + width * i as f64;
        let b = if i + 1 == pieces { hi } else { a + width };
        let seg = kronrod(&f, a, b);
        total_err += seg.err;
        heap.push(seg);
    }
    loop {
        if !total_err.is_finite() {
            return Err(Error::QuadratureFailure { lo, hi, error_estimate: total_err });
        }
        if total_err <= tol {
            break;
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure { lo, hi, error_estimate: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            return Err(Error::QuadratureFailure { lo, hi, error_estimate: total_err });
        }
        let left = kronrod(&f, worst.lo, mid);
        let right = kronrod(&f, mid, worst.hi);
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        // guard against drift in the running sum
        if total_err <= tol {
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
    // Sum in interval order so the result does not depend on heap layout.
    let mut segs = heap.into_vec();
    segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(segs.iter().fold(T::zero(), |acc, s| acc + s.value))
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn integrate<T, F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_with(f, lo, hi, tol, 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let v: f64 = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-13);
    }

    #[test]
    fn kinked_integrand() {
        let v: f64 = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 0.5 * 0.09 + 0.5 * 0.49, epsilon = 1e-11);
    }

    #[test]
    fn oscillatory_complex() {
        // ∫_0^1 e^{2πi·5x} dx = 0
        let w = 2.0 * std::f64::consts::PI * 5.0;
        let v: Complex64 = integrate_with(|x| Complex64::new(0.0, w * x).exp(), 0.0, 1.0, 1e-12, 20).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn empty_range_is_zero() {
        let v: f64 = integrate(|x| x, 1.0, 1.0, 1e-9).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let r: Result<f64> = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
