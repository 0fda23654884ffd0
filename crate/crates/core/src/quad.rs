//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands.
//!
//! Finite intervals are handled by globally adaptive bisection of the
//! interval with the largest error estimate (QUADPACK `qag` strategy with the
//! 7/15 point pair). Half-lines are covered by consecutive panels, each
//! integrated adaptively, until the integrand envelope has died out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    /// Largest |f| seen at any node; used for tail decisions on half-lines.
    pub max_abs: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    floor: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Returns the 15-point value, the error estimate and the roundoff floor of
/// the estimate.
fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, max_abs: &mut f64) -> (Complex64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.norm() * WGK[7];
    let mut fvals = [Complex64::new(0.0, 0.0); 14];
    let mut biggest = fc.norm();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fvals[2 * j] = f1;
        fvals[2 * j + 1] = f2;
        kron += (f1 + f2) * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
        biggest = biggest.max(f1.norm()).max(f2.norm());
    }
    *max_abs = max_abs.max(biggest);
    let mean = kron * 0.5;
    let mut asc = (fc - mean).norm() * WGK[7];
    for j in 0..7 {
        asc += ((fvals[2 * j] - mean).norm() + (fvals[2 * j + 1] - mean).norm()) * WGK[j];
    }
    let value = kron * half;
    let resasc = asc * half.abs();
    let mut err = ((kron - gauss) * half).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_sum * half.abs();
    err = err.max(floor);
    (value, err, floor)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    integrate_limited(&f, a, b, tol, 4000)
}

fn integrate_limited<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_segments: usize,
) -> Result<Quadrature> {
    let mut max_abs = 0.0;
    if a == b {
        return Ok(Quadrature { value: Complex64::new(0.0, 0.0), error: 0.0, max_abs, evaluations: 0 });
    }
    let (value, error, floor) = kronrod(f, a, b, &mut max_abs);
    let mut evaluations = 15;
    let mut total_err = error;
    let mut total_floor = floor;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, floor });
    // the tolerance is relaxed to twice the accumulated roundoff floor, below
    // which bisection cannot make progress
    while total_err > tol.max(2.0 * total_floor) {
        if heap.len() >= max_segments {
            return Err(Error::Integration(format!(
                "no convergence on [{a}, {b}]: error {total_err:.3e} > tol {tol:.3e}"
            )));
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval cannot be split further in floating point
            heap.push(seg);
            break;
        }
        let (v1, e1, f1) = kronrod(f, seg.a, mid, &mut max_abs);
        let (v2, e2, f2) = kronrod(f, mid, seg.b, &mut max_abs);
        evaluations += 30;
        total_err += e1 + e2 - seg.error;
        total_floor += f1 + f2 - seg.floor;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1, floor: f1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2, floor: f2 });
    }
    // recompute the sum from scratch to avoid drift from the running updates
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for seg in heap.iter() {
        value += seg.value;
        error += seg.error;
    }
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Integration(format!("non-finite integral on [{a}, {b}]")));
    }
    Ok(Quadrature { value, error, max_abs, evaluations })
}

/// Integrates `f` over `[0, inf)`, assuming |f(t)| decays at least like
/// `exp(-rate t)` eventually. Panels of width `1/rate` (clamped to
/// `[0.25, 4]`) are added until two consecutive panels show an envelope
/// below `tol * 1e-3`.
pub fn integrate_half_line<F: Fn(f64) -> Complex64>(f: F, rate: f64, tol: f64) -> Result<Quadrature> {
    let width = if rate.is_finite() && rate > 0.0 { (1.0 / rate).clamp(0.25, 4.0) } else { 1.0 };
    let max_panels = 20_000;
    let mut out = Quadrature { value: Complex64::new(0.0, 0.0), error: 0.0, max_abs: 0.0, evaluations: 0 };
    let mut quiet = 0;
    for p in 0..max_panels {
        let a = p as f64 * width;
        let q = integrate_limited(&f, a, a + width, tol / 8.0, 2000)?;
        out.value += q.value;
        out.error += q.error;
        out.max_abs = out.max_abs.max(q.max_abs);
        out.evaluations += q.evaluations;
        if q.max_abs * width < tol * 1e-3 {
            quiet += 1;
            if quiet >= 2 {
                return Ok(out);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Integration(format!(
        "tail did not decay within {} panels of width {width}",
        max_panels
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| c(x * x * x - 2.0 * x), 0.0, 2.0, 1e-13).unwrap();
        assert!((q.value.re - 0.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let w = 80.0;
        let q = integrate(|x| Complex64::new(0.0, -w * x).exp(), 0.0, 3.0, 1e-13).unwrap();
        let exact = (Complex64::new(0.0, -w * 3.0).exp() - 1.0) / Complex64::new(0.0, -w);
        assert!((q.value - exact).norm() < 1e-12, "{}", (q.value - exact).norm());
    }

    #[test]
    fn half_line_gaussian_moment() {
        // int_0^inf t exp(-t^2/2) dt = 1
        let q = integrate_half_line(|t| c(t * (-0.5 * t * t).exp()), f64::INFINITY, 1e-13).unwrap();
        assert!((q.value.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_line_without_decay_fails() {
        assert!(integrate_half_line(|_| c(1.0), 1.0, 1e-8).is_err());
    }
}
