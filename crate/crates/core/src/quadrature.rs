//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Intervals are kept in a max-heap keyed on their local error estimate and
//! the worst one is bisected until the summed estimate falls below the
//! absolute tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const DEFAULT_MAX_EVALUATIONS: usize = 150_000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
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

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut k15 = fc * WGK[7];
    let mut g7 = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        k15 += WGK[j] * pair;
        if j % 2 == 1 {
            g7 += WG[j / 2] * pair;
        }
    }
    let value = k15 * half;
    let error = ((k15 - g7) * half).abs();
    Ok(Segment { a, b, value, error })
}

/// Integrates a fallible integrand over `[a, b]` to absolute tolerance `tol`.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, tol: f64, max_evaluations: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return try_integrate(f, b, a, tol, max_evaluations).map(|v| -v);
    }
    let first = kronrod(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut total = first.value;
    let mut total_error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let floor = 64.0 * f64::EPSILON * total.abs();
        if total_error <= tol.max(floor) {
            return Ok(total);
        }
        if evaluations + 30 > max_evaluations {
            return Err(Error::QuadratureFailure { a, b, tol, estimate: total_error, evaluations });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer splittable in floating point.
            return Err(Error::QuadratureFailure { a, b, tol, estimate: total_error, evaluations });
        }
        let left = kronrod(&mut f, worst.a, mid)?;
        let right = kronrod(&mut f, mid, worst.b)?;
        evaluations += 30;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Guard against drift of the running sums.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_error = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Infallible convenience wrapper around [`try_integrate`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, tol, DEFAULT_MAX_EVALUATIONS)
}

/// Cumulative integral of uniformly sampled data with a fourth-order local
/// cubic rule. `values[i]` is the integrand at `a + i h`.
pub fn cumulative_uniform(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
        }
        return out;
    }
    for i in 0..n - 1 {
        let piece = if i == 0 {
            h / 24.0 * (9.0 * values[0] + 19.0 * values[1] - 5.0 * values[2] + values[3])
        } else if i == n - 2 {
            h / 24.0 * (9.0 * values[n - 1] + 19.0 * values[n - 2] - 5.0 * values[n - 3] + values[n - 4])
        } else {
            h / 24.0 * (-values[i - 1] + 13.0 * values[i] + 13.0 * values[i + 1] - values[i + 2])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 6.0).abs() < 1e-13);
    }

    #[test]
    fn empty_and_reversed_intervals() {
        assert_eq!(integrate(|x| x.exp(), 0.3, 0.3, 1e-10).unwrap(), 0.0);
        let fwd = integrate(|x| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        let rev = integrate(|x| x.exp(), 1.0, 0.0, 1e-12).unwrap();
        assert!((fwd + rev).abs() < 1e-14);
        assert!((fwd - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand_converges() {
        // Lorentzian of width 1e-3 centred inside the interval.
        let w = 1e-3;
        let v = integrate(|x| w / ((x - 0.37).powi(2) + w * w), 0.0, 1.0, 1e-10).unwrap();
        let exact = (0.63f64 / w).atan() + (0.37f64 / w).atan();
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = try_integrate(|x: f64| Ok((1.0 / x).sin() / x), 0.0, 1.0, 1e-14, 3_000).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }

    #[test]
    fn cumulative_rule_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let vals: Vec<f64> = (0..n).map(|i| (3.0 * i as f64 * h).cos()).collect();
            let cum = cumulative_uniform(&vals, h);
            (0..n)
                .map(|i| (cum[i] - (3.0 * i as f64 * h).sin() / 3.0).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
