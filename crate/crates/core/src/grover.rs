//! Adiabatic search: `H(s) = (1 - f) (1 - |sigma><sigma|) + f (1 - |m><m|)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::apt::TradeoffResult;
use crate::error::{Error, Result};
use crate::family::InterpolatedFamily;
use crate::linalg::{c, CMat};
use crate::quadrature;
use crate::schedule::{Schedule, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroverMode {
    /// Two-level model in the `{|m>, |m_perp>}` basis.
    Reduced2,
    /// Full `N x N` model with the given marked item.
    Full { marked: usize },
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("database size must be at least 2, got {n}")));
    }
    Ok(())
}

pub fn grover_family(n: usize, schedule: Schedule, mode: GroverMode) -> Result<InterpolatedFamily> {
    check_n(n)?;
    let nf = n as f64;
    let (hi, hf) = match mode {
        GroverMode::Reduced2 => {
            let q = (nf - 1.0) / nf;
            let off = -(nf - 1.0).sqrt() / nf;
            let hi = CMat::from_row_slice(2, 2, &[c(q), c(off), c(off), c(1.0 / nf)]);
            let hf = CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
            (hi, hf)
        }
        GroverMode::Full { marked } => {
            if marked >= n {
                return Err(Error::InvalidArgument(format!("marked index {marked} out of range for N = {n}")));
            }
            let hi = CMat::from_fn(n, n, |i, j| c(if i == j { 1.0 } else { 0.0 } - 1.0 / nf));
            let mut hf = CMat::identity(n, n);
            hf[(marked, marked)] = c(0.0);
            (hi, hf)
        }
    };
    InterpolatedFamily::new(hi, hf, schedule)
}

/// `Delta(f) = sqrt(1 - 4 (N-1)/N f (1 - f))`.
pub fn gap(n: usize, f: f64) -> f64 {
    let q = (n as f64 - 1.0) / n as f64;
    (1.0 - 4.0 * q * f * (1.0 - f)).sqrt()
}

/// `lambda_10(s) = sqrt(N-1)/N * f'(s) / Delta^3`.
pub fn lambda10(n: usize, schedule: &Schedule, s: f64) -> f64 {
    let r = (n as f64 - 1.0).sqrt();
    let d = gap(n, schedule.value(s));
    r / n as f64 * schedule.derivative(s, 1) / (d * d * d)
}

/// Ground-state Fisher information `[2 sqrt(N-1)/N f' / Delta^2]^2`.
pub fn fisher_information(n: usize, schedule: &Schedule, s: f64) -> f64 {
    let r = (n as f64 - 1.0).sqrt();
    let d = gap(n, schedule.value(s));
    (2.0 * r / n as f64 * schedule.derivative(s, 1) / (d * d)).powi(2)
}

/// `J_0(1) = (N-1)/N^2 int f'^2 / Delta^5`.
pub fn j0(n: usize, schedule: &Schedule, tol: f64) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    let pref = (nf - 1.0) / (nf * nf);
    quadrature::integrate(
        |s| {
            let fd = schedule.derivative(s, 1);
            pref * fd * fd / gap(n, schedule.value(s)).powi(5)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Large-`N` fit `(N/2)(1 + sqrt(p) + p/20)` for beta schedules.
pub fn j0_beta_approx(n: usize, p: u32) -> f64 {
    let pf = p as f64;
    n as f64 / 2.0 * (1.0 + pf.sqrt() + pf / 20.0)
}

/// `omega_10(1) = int Delta`.
pub fn omega10(n: usize, schedule: &Schedule, tol: f64) -> Result<f64> {
    check_n(n)?;
    quadrature::integrate(|s| gap(n, schedule.value(s)), 0.0, 1.0, tol)
}

/// Run times at which the first-order coefficient vanishes, `n = 1..=count`.
pub fn resonance_times(n: usize, schedule: &Schedule, count: usize, tol: f64) -> Result<Vec<f64>> {
    let w = omega10(n, schedule, tol)?;
    Ok((1..=count).map(|k| 2.0 * PI * k as f64 / w).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum J0Source {
    /// Adaptive quadrature.
    #[default]
    Exact,
    /// `(N/2)(1 + sqrt(p) + p/20)`.
    Approximate,
}

/// Closed-form trade-off of the search model for a named schedule.
pub fn closed_tradeoff(n: usize, kind: ScheduleKind, c: f64, p: u32, j0_source: J0Source, tol: f64) -> Result<TradeoffResult> {
    check_n(n)?;
    let nf = n as f64;
    let r = (nf - 1.0).sqrt();
    let q = (nf - 1.0) / nf;
    match kind {
        ScheduleKind::Optimal => {
            let a = (1.0 / nf.sqrt()).acos();
            Ok(TradeoffResult::new(c * a * r, c, 0, 2.0 * a))
        }
        ScheduleKind::Linear => {
            let t_val = c / 3.0 * (2.0 * (nf - 1.0) - 17.0 * q).abs();
            Ok(TradeoffResult::new(t_val, c, 0, 2.0 * r / nf))
        }
        ScheduleKind::Beta if p == 0 => closed_tradeoff(n, ScheduleKind::Linear, c, 0, j0_source, tol),
        ScheduleKind::Beta => {
            let j = match j0_source {
                J0Source::Exact => j0(n, &Schedule::beta(p), tol)?,
                J0Source::Approximate => j0_beta_approx(n, p),
            };
            let pf = p as f64;
            let t_val = c * (j + pf * (pf + 1.0)).abs();
            let top = factorial(2 * p as usize + 1) / factorial(p as usize);
            Ok(TradeoffResult::new(t_val, c, p, 2.0 * r / nf * top))
        }
        ScheduleKind::Custom => Err(Error::UnsupportedSchedule("custom".into())),
    }
}

/// Large-`N` validity error for boundary cancelation of order `p`.
pub fn eps_tilde_beta_asymptotic(n: usize, p: u32, c: f64) -> f64 {
    let pf = p as f64;
    let top = factorial(2 * p as usize + 1) / factorial(p as usize);
    let fit = 1.0 + pf.sqrt() + pf / 20.0;
    2f64.powi(p as i32 + 2) * top / (c.powi(p as i32 + 1) * fit.powi(p as i32 + 1) * (n as f64).powf(pf + 1.5))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|m| m as f64).product()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FisherGeometry {
    /// Action `K = (1/4) int F`.
    pub action: f64,
    /// Bures length `L = int sqrt(F) / 2`.
    pub length: f64,
    /// Shortest-path length `arccos(1/sqrt(N))`.
    pub shortest: f64,
}

pub fn fisher_geometry(n: usize, schedule: &Schedule, tol: f64) -> Result<FisherGeometry> {
    check_n(n)?;
    let action = quadrature::integrate(|s| fisher_information(n, schedule, s) / 4.0, 0.0, 1.0, tol)?;
    let length = quadrature::integrate(|s| fisher_information(n, schedule, s).sqrt() / 2.0, 0.0, 1.0, tol)?;
    Ok(FisherGeometry { action, length, shortest: (1.0 / (n as f64).sqrt()).acos() })
}

/// Integrates `f' = (N / sqrt(N-1)) arccos(1/sqrt(N)) Delta^2(f)` from
/// `f(0) = 0` with classical RK4, doubling the grid until successive
/// solutions agree to `tol`.
pub fn schedule_from_constant_fisher(n: usize, tol: f64) -> Result<Schedule> {
    check_n(n)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let nf = n as f64;
    let q = (nf - 1.0) / nf;
    let rate = nf / (nf - 1.0).sqrt() * (1.0 / nf.sqrt()).acos();
    let coef = [1.0, -4.0 * q, 4.0 * q];
    let rhs = |f: f64| rate * (coef[0] + coef[1] * f + coef[2] * f * f);
    let solve = |steps: usize| -> Vec<f64> {
        let h = 1.0 / steps as f64;
        let mut out = Vec::with_capacity(steps + 1);
        let mut f = 0.0;
        out.push(f);
        for _ in 0..steps {
            let k1 = rhs(f);
            let k2 = rhs(f + 0.5 * h * k1);
            let k3 = rhs(f + 0.5 * h * k2);
            let k4 = rhs(f + h * k3);
            f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            out.push(f);
        }
        out
    };
    let mut steps = 256;
    let mut coarse = solve(steps);
    while steps <= 1 << 20 {
        let fine = solve(2 * steps);
        if fine.iter().any(|v| !v.is_finite()) {
            return Err(Error::OdeDivergence(format!("non-finite value with {} steps", 2 * steps)));
        }
        let change = coarse.iter().enumerate().map(|(i, v)| (v - fine[2 * i]).abs()).fold(0.0, f64::max);
        // RK4 error of the fine grid is about change / 15.
        if change / 15.0 <= tol / 10.0 {
            let end = fine[fine.len() - 1];
            if (end - 1.0).abs() > tol {
                return Err(Error::OdeDivergence(format!("f(1) = {end} misses the boundary condition")));
            }
            return Ok(Schedule::quadratic_ode(rate, coef, fine));
        }
        coarse = fine;
        steps *= 2;
    }
    Err(Error::OdeDivergence(format!("no convergence to {tol:e} within {steps} steps")))
}

/// Asymptotic bound `(pi/2 + pi^2) sqrt(N) / T`.
pub fn jansen_bound(n: usize, t: f64) -> f64 {
    (PI / 2.0 + PI * PI) * (n as f64).sqrt() / t
}

/// Run time `(pi/2) sqrt(N) / eps` of the local adiabatic condition.
pub fn roland_time(n: usize, eps: f64) -> f64 {
    PI / 2.0 * (n as f64).sqrt() / eps
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LiteratureComparison {
    pub n: usize,
    pub t: f64,
    pub jansen: f64,
    pub roland_eps: f64,
    /// Neither expression is tight; they are overlays only.
    pub tight: bool,
}

pub fn literature_bounds(n: usize, t: f64) -> LiteratureComparison {
    LiteratureComparison { n, t, jansen: jansen_bound(n, t), roland_eps: PI / 2.0 * (n as f64).sqrt() / t, tight: false }
}
