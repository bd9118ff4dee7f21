//! Interpolation schedules `f(s)` with `f(0) = 0`, `f(1) = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Linear,
    Optimal,
    Beta,
    Custom,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Optimal => "optimal",
            ScheduleKind::Beta => "beta",
            ScheduleKind::Custom => "custom",
        })
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ScheduleKind::Linear),
            "optimal" => Ok(ScheduleKind::Optimal),
            "beta" => Ok(ScheduleKind::Beta),
            "custom" => Ok(ScheduleKind::Custom),
            other => Err(Error::config("schedule", format!("unknown schedule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Linear,
    /// `f = (1 + tan(a (2s - 1)) / r) / 2` with `r = sqrt(N - 1)`, `a = atan r`.
    Optimal { r: f64, a: f64 },
    /// Dense polynomial coefficients of `I_s(p + 1, p + 1)`.
    Beta { p: u32, coeffs: Vec<f64> },
    /// Solution of the autonomous ODE `f' = rate * (c0 + c1 f + c2 f^2)`,
    /// tabulated on a uniform grid and interpolated with quintic Hermite
    /// pieces.
    QuadraticOde { rate: f64, c: [f64; 3], h: f64, nodes: Vec<f64> },
}

/// A monotone interpolation profile with analytic derivatives.
#[derive(Debug, Clone)]
pub struct Schedule {
    repr: Repr,
}

impl Schedule {
    pub fn linear() -> Self {
        Schedule { repr: Repr::Linear }
    }

    /// Constant-Fisher-speed schedule for a database of size `n`.
    pub fn optimal(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("optimal schedule needs N >= 2, got {n}")));
        }
        let r = ((n - 1) as f64).sqrt();
        Ok(Schedule { repr: Repr::Optimal { r, a: r.atan() } })
    }

    /// Minimal-degree polynomial with `f^(j)(0) = f^(j)(1) = 0` for `j = 1..=p`,
    /// i.e. the regularized incomplete beta function `I_s(p + 1, p + 1)`.
    pub fn beta(p: u32) -> Self {
        if p == 0 {
            return Schedule::linear();
        }
        let p_us = p as usize;
        let mut coeffs = vec![0.0; 2 * p_us + 2];
        // Normalization 1 / B(p+1, p+1) = (2p+1)! / (p!)^2.
        let norm = (p_us + 1..=2 * p_us + 1).map(|k| k as f64).product::<f64>()
            / (1..=p_us).map(|k| k as f64).product::<f64>();
        let mut binom = 1.0;
        for k in 0..=p_us {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let power = p_us + k + 1;
            coeffs[power] = norm * sign * binom / power as f64;
            binom = binom * (p_us - k) as f64 / (k + 1) as f64;
        }
        Schedule { repr: Repr::Beta { p, coeffs } }
    }

    pub(crate) fn quadratic_ode(rate: f64, c: [f64; 3], nodes: Vec<f64>) -> Self {
        let h = 1.0 / (nodes.len() - 1) as f64;
        Schedule { repr: Repr::QuadraticOde { rate, c, h, nodes } }
    }

    pub fn kind(&self) -> ScheduleKind {
        match self.repr {
            Repr::Linear => ScheduleKind::Linear,
            Repr::Optimal { .. } => ScheduleKind::Optimal,
            Repr::Beta { .. } => ScheduleKind::Beta,
            Repr::QuadraticOde { .. } => ScheduleKind::Custom,
        }
    }

    /// Boundary-cancelation order (0 unless this is a beta schedule).
    pub fn order(&self) -> u32 {
        match self.repr {
            Repr::Beta { p, .. } => p,
            _ => 0,
        }
    }

    /// Highest derivative order available analytically.
    pub fn max_derivative(&self) -> usize {
        match self.repr {
            Repr::QuadraticOde { .. } => 4,
            _ => usize::MAX,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.derivative(s, 0)
    }

    /// `d^j f / ds^j` at `s`.
    pub fn derivative(&self, s: f64, j: usize) -> f64 {
        match &self.repr {
            Repr::Linear => match j {
                0 => s,
                1 => 1.0,
                _ => 0.0,
            },
            Repr::Optimal { r, a } => {
                let t = (a * (2.0 * s - 1.0)).tan();
                let poly = tan_derivative_poly(j);
                let pj = horner(&poly, t);
                if j == 0 {
                    0.5 * (1.0 + pj / r)
                } else {
                    pj * (2.0 * a).powi(j as i32) / (2.0 * r)
                }
            }
            Repr::Beta { coeffs, .. } => poly_derivative(coeffs, s, j),
            Repr::QuadraticOde { rate, c, h, nodes } => {
                if j > 4 {
                    return f64::NAN;
                }
                ode_derivatives(*rate, c, hermite_value(*rate, c, *h, nodes, s))[j]
            }
        }
    }

    /// Checks `f(0) = 0`, `f(1) = 1` and monotonicity on `samples + 1` points.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let f0 = self.value(0.0);
        let f1 = self.value(1.0);
        if f0.abs() > 1e-12 || (f1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("schedule endpoints are f(0) = {f0}, f(1) = {f1}")));
        }
        let mut prev = f0;
        for i in 1..=samples {
            let v = self.value(i as f64 / samples as f64);
            if v < prev - 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "schedule decreases near s = {}",
                    i as f64 / samples as f64
                )));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.repr {
            Repr::Beta { p, .. } => format!("beta{p}"),
            _ => self.kind().to_string(),
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64], s: f64, j: usize) -> f64 {
    if j >= coeffs.len() {
        return 0.0;
    }
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().skip(j).rev() {
        let falling: f64 = (k - j + 1..=k).map(|m| m as f64).product();
        acc = acc * s + c * falling;
    }
    acc
}

/// Polynomial `P_j(t)` with `d^j tan(x) / dx^j = P_j(tan x)`.
fn tan_derivative_poly(j: usize) -> Vec<f64> {
    let mut p = vec![0.0, 1.0];
    for _ in 0..j {
        let deriv: Vec<f64> = p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        // times (1 + t^2)
        let mut next = vec![0.0; deriv.len() + 2];
        for (k, c) in deriv.iter().enumerate() {
            next[k] += c;
            next[k + 2] += c;
        }
        p = next;
    }
    p
}

fn ode_derivatives(rate: f64, c: &[f64; 3], f: f64) -> [f64; 5] {
    let g = c[0] + c[1] * f + c[2] * f * f;
    let g1 = c[1] + 2.0 * c[2] * f;
    let g2 = 2.0 * c[2];
    let d1 = rate * g;
    let d2 = rate * g1 * d1;
    let d3 = rate * (g2 * d1 * d1 + g1 * d2);
    let d4 = rate * (3.0 * g2 * d1 * d2 + g1 * d3);
    [f, d1, d2, d3, d4]
}

fn hermite_value(rate: f64, c: &[f64; 3], h: f64, nodes: &[f64], s: f64) -> f64 {
    let last = nodes.len() - 1;
    let pos = (s / h).clamp(0.0, last as f64);
    let i = (pos.floor() as usize).min(last - 1);
    let t = pos - i as f64;
    let a = ode_derivatives(rate, c, nodes[i]);
    let b = ode_derivatives(rate, c, nodes[i + 1]);
    // Quintic Hermite basis on [0, 1] with scaled derivatives.
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h3 = 0.5 * t3 - t4 + 0.5 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    h0 * a[0] + h1 * h * a[1] + h2 * h * h * a[2] + h3 * h * h * b[2] + h4 * h * b[1] + h5 * b[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn beta_one_is_smoothstep() {
        let f = Schedule::beta(1);
        for &s in &[0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((f.value(s) - (3.0 * s * s - 2.0 * s * s * s)).abs() < 1e-14);
        }
        assert!((f.value(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_boundary_derivatives() {
        for p in 1..=4u32 {
            let f = Schedule::beta(p);
            let pu = p as usize;
            for j in 1..=pu {
                assert!(f.derivative(0.0, j).abs() < 1e-10, "p={p} j={j}");
                assert!(f.derivative(1.0, j).abs() < 1e-9, "p={p} j={j}");
            }
            let top = f.derivative(1.0, pu + 1);
            let expected = factorial(2 * pu + 1) / factorial(pu);
            assert!((top.abs() - expected).abs() < 1e-8 * expected, "p={p}: {top}");
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            assert!((f.derivative(0.0, pu + 1) - sign * top).abs() < 1e-8 * expected);
            let next0 = f.derivative(0.0, pu + 2);
            let next1 = f.derivative(1.0, pu + 2);
            assert!((next0 + sign * next1).abs() < 1e-7 * next1.abs().max(1.0));
            for &s in &[0.1, 0.3, 0.45] {
                assert!((f.value(s) + f.value(1.0 - s) - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn optimal_endpoints_and_midpoint() {
        let f = Schedule::optimal(32).unwrap();
        assert!(f.value(0.0).abs() < 1e-14);
        assert!((f.value(1.0) - 1.0).abs() < 1e-14);
        assert!((f.value(0.5) - 0.5).abs() < 1e-15);
        f.validate(1000).unwrap();
    }

    #[test]
    fn optimal_derivatives_match_finite_differences() {
        let f = Schedule::optimal(16).unwrap();
        let h = 1e-4;
        for &s in &[0.05, 0.4, 0.5, 0.93] {
            for j in 0..4 {
                let fd = (f.derivative(s + h, j) - f.derivative(s - h, j)) / (2.0 * h);
                let exact = f.derivative(s, j + 1);
                assert!((fd - exact).abs() < 1e-5 * exact.abs().max(1.0), "s={s} j={j}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn linear_is_beta_zero() {
        assert_eq!(Schedule::beta(0).kind(), ScheduleKind::Linear);
        assert_eq!(Schedule::linear().derivative(0.3, 2), 0.0);
    }

    #[test]
    fn kind_round_trips_through_strings() {
        for kind in [ScheduleKind::Linear, ScheduleKind::Optimal, ScheduleKind::Beta, ScheduleKind::Custom] {
            assert_eq!(kind.to_string().parse::<ScheduleKind>().unwrap(), kind);
        }
        assert!("cubic".parse::<ScheduleKind>().is_err());
    }
}
