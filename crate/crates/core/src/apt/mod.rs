//! Adiabatic perturbation theory: leading coefficients, distance bounds,
//! validity times and validity errors.

pub mod recurrence;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::HamiltonianFamily;
use crate::linalg::{eigh, CMat};
use crate::quadrature::{self, DEFAULT_MAX_EVALUATIONS};
use crate::spectral::{degeneracy_threshold, relative_phase, transported_frame, SpectralFrame};

pub use recurrence::{distance_expansion, recurrence_table, CoefficientTable, DistanceExpansion, RecurrenceOptions};

/// Below this value of `sqrt(sum |b|^2)` the leading coefficients count as
/// vanishing.
pub const VANISHING_NORM: f64 = 1e-10;

/// `sum_k a_k exp(i T phi_k)`, kept symbolic in `T`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhasedSum {
    terms: Vec<(Complex64, f64)>,
}

impl PhasedSum {
    pub fn new() -> Self {
        PhasedSum::default()
    }

    /// Adds `amplitude * exp(i T frequency)`, merging equal frequencies.
    pub fn push(&mut self, amplitude: Complex64, frequency: f64) {
        let tol = 1e-12 * frequency.abs().max(1.0);
        if let Some(term) = self.terms.iter_mut().find(|(_, w)| (w - frequency).abs() <= tol) {
            term.0 += amplitude;
        } else {
            self.terms.push((amplitude, frequency));
        }
    }

    pub fn with(mut self, amplitude: Complex64, frequency: f64) -> Self {
        self.push(amplitude, frequency);
        self
    }

    pub fn terms(&self) -> &[(Complex64, f64)] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|&(a, w)| a * Complex64::from_polar(1.0, t * w)).sum()
    }

    /// Largest modulus over all `T`, with every oscillating factor aligned.
    pub fn max_modulus(&self) -> f64 {
        self.terms.iter().map(|(a, _)| a.norm()).sum()
    }

    /// Reverse-triangle lower bound on the modulus over all `T`.
    pub fn min_modulus(&self) -> f64 {
        let largest = self.terms.iter().map(|(a, _)| a.norm()).fold(0.0, f64::max);
        (2.0 * largest - self.max_modulus()).max(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AptOptions {
    /// Absolute tolerance for the `J_n` and dynamical-phase integrals.
    pub quad_tol: f64,
}

impl Default for AptOptions {
    fn default() -> Self {
        AptOptions { quad_tol: 1e-10 }
    }
}

/// Error/run-time trade-off `eps(T) <= A / T^(p+1)` valid for `T >= T_val`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffResult {
    pub t_val: f64,
    pub eps_tilde: f64,
    pub c: f64,
    pub p: u32,
    /// `A` in the bound `A / T^(p+1)`.
    pub coefficient: f64,
}

impl TradeoffResult {
    pub fn new(t_val: f64, c: f64, p: u32, coefficient: f64) -> Self {
        let eps_tilde = coefficient / t_val.powi(p as i32 + 1);
        TradeoffResult { t_val, eps_tilde, c, p, coefficient }
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.coefficient / t.powi(self.p as i32 + 1)
    }

    /// Run time at which the bound reaches `eps`.
    pub fn time_for_error(&self, eps: f64) -> f64 {
        (self.coefficient / eps).powf(1.0 / (self.p as f64 + 1.0))
    }

    /// `(alpha^(p+1) eps_tilde, T_val / alpha)` for `0 < alpha <= 1`.
    pub fn validity_contract(&self, alpha: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok((alpha.powi(self.p as i32 + 1) * self.eps_tilde, self.t_val / alpha))
    }
}

/// First two non-vanishing orders of the excited-state coefficients at a
/// fixed `s`, for every level `n != 0` (index 0 is unused).
#[derive(Debug, Clone)]
pub struct Expansion {
    pub s: f64,
    /// Boundary-cancelation order; `lead` holds order `p + 1`.
    pub p: u32,
    pub lead: Vec<PhasedSum>,
    pub next: Vec<PhasedSum>,
    /// `b_0^(1)(s) = J_0(s)`.
    pub b0_first: f64,
    /// `omega_n0(s)`.
    pub omega: Vec<f64>,
    /// `J_n(s)`.
    pub j: Vec<f64>,
    pub frame0: SpectralFrame,
    pub frame_s: SpectralFrame,
}

impl Expansion {
    fn power(&self) -> i32 {
        self.p as i32 + 1
    }

    pub fn lead_norm_sq(&self, t: f64) -> f64 {
        self.lead.iter().skip(1).map(|b| b.eval(t).norm_sqr()).sum()
    }

    /// Leading term `sqrt(sum |b_n^(p+1)|^2) / T^(p+1)`.
    pub fn leading(&self, t: f64) -> f64 {
        self.lead_norm_sq(t).sqrt() / t.powi(self.power())
    }

    /// `(lower, upper)` with oscillating factors at their extreme values.
    pub fn bounds(&self, t: f64) -> (f64, f64) {
        let lower: f64 = self.lead.iter().skip(1).map(|b| b.min_modulus().powi(2)).sum();
        let upper: f64 = self.lead.iter().skip(1).map(|b| b.max_modulus().powi(2)).sum();
        let scale = t.powi(self.power());
        (lower.sqrt() / scale, upper.sqrt() / scale)
    }

    /// Second term of the two-term expansion at run time `T`.
    pub fn next_term(&self, t: f64) -> f64 {
        let s = self.lead_norm_sq(t);
        let scale = t.powi(self.power() + 1);
        if s.sqrt() <= VANISHING_NORM {
            let nn: f64 = self.next.iter().skip(1).map(|b| b.eval(t).norm_sqr()).sum();
            return nn.sqrt() / scale;
        }
        let cross: f64 = self.lead.iter().zip(&self.next).skip(1).map(|(a, b)| (a.eval(t).conj() * b.eval(t)).im).sum();
        // b_0^(1) is real, so its correction term drops out.
        -(cross / s.sqrt()) / scale
    }

    /// `sum |b^(p+1)|_max^2`.
    pub fn lead_max_sq(&self) -> f64 {
        self.lead.iter().skip(1).map(|b| b.max_modulus().powi(2)).sum()
    }

    /// `sum |b^(p+1)|_max |b^(p+2)|_max`.
    pub fn cross_max(&self) -> f64 {
        self.lead.iter().zip(&self.next).skip(1).map(|(a, b)| a.max_modulus() * b.max_modulus()).sum()
    }

    fn check_nonvanishing(&self) -> Result<f64> {
        let s = self.lead_max_sq();
        if s.sqrt() <= VANISHING_NORM {
            return Err(Error::VanishingLeadingOrder { s: self.s, norm: s });
        }
        Ok(s)
    }

    pub fn validity_time(&self, c: f64) -> Result<f64> {
        let s = self.check_nonvanishing()?;
        Ok(c * self.cross_max() / s)
    }

    /// `S^(p+3/2) / (C^(p+1) X^(p+1))`.
    pub fn epsilon_tilde(&self, c: f64) -> Result<f64> {
        let s = self.check_nonvanishing()?;
        let q = self.p as f64 + 1.0;
        Ok(s.powf(q + 0.5) / (c * self.cross_max()).powf(q))
    }

    pub fn tradeoff(&self, c: f64) -> Result<TradeoffResult> {
        let t_val = self.validity_time(c)?;
        Ok(TradeoffResult::new(t_val, c, self.p, self.lead_max_sq().sqrt()))
    }
}

fn second_derivative_in_frame(family: &dyn HamiltonianFamily, frame: &SpectralFrame) -> Result<CMat> {
    let h2 = family.checked_derivative(frame.s, 2)?;
    Ok(frame.vectors.adjoint() * h2 * &frame.vectors)
}

/// `d/ds lambda_n0` from the first and second derivatives of `H`.
fn lambda_dot(frame: &SpectralFrame, b: &CMat, n: usize) -> Complex64 {
    let a = &frame.dh;
    let m = &frame.couplings;
    let d = frame.dimension();
    let mut adot = b[(n, 0)];
    for j in 0..d {
        adot += m[(j, n)].conj() * a[(j, 0)] + a[(n, j)] * m[(j, 0)];
    }
    let gap = frame.gap(n, 0);
    let gap_dot = a[(n, n)].re - a[(0, 0)].re;
    -adot / (gap * gap) + a[(n, 0)] * (2.0 * gap_dot / gap.powi(3))
}

fn j_integrand(family: &dyn HamiltonianFamily, n: usize, x: f64, fisher: bool) -> Result<f64> {
    let (e, v) = eigh(&family.hamiltonian(x));
    let threshold = degeneracy_threshold(&e);
    if e[1] - e[0] <= threshold {
        return Err(Error::DegenerateGroundGap { s: x, gap: e[1] - e[0], threshold });
    }
    let hdot = family.checked_derivative(x, 1)?;
    let col = v.column(n);
    let mut total = 0.0;
    let mut min_gap = f64::INFINITY;
    for k in 0..e.len() {
        let gap = e[k] - e[n];
        if k == n || gap.abs() <= threshold {
            continue;
        }
        let elem = v.column(k).dotc(&(&hdot * col));
        let m2 = elem.norm_sqr() / (gap * gap);
        total += if fisher { m2 } else { m2 / gap };
        min_gap = min_gap.min(gap.abs());
    }
    Ok(if fisher { if total == 0.0 { 0.0 } else { total / min_gap } } else { total })
}

/// `J_n(s) = sum_{k != n} int_0^s |M_kn|^2 / Delta_kn`.
pub fn j_integral(family: &dyn HamiltonianFamily, n: usize, s: f64, tol: f64) -> Result<f64> {
    quadrature::try_integrate(|x| j_integrand(family, n, x, false), 0.0, s, tol, DEFAULT_MAX_EVALUATIONS)
}

/// `int_0^s F_n / (4 min_k |Delta_kn|)`, an upper bound on `J_n(s)`.
pub fn j_fisher_bound(family: &dyn HamiltonianFamily, n: usize, s: f64, tol: f64) -> Result<f64> {
    quadrature::try_integrate(|x| j_integrand(family, n, x, true), 0.0, s, tol, DEFAULT_MAX_EVALUATIONS)
}

fn phases_and_j(family: &dyn HamiltonianFamily, s: f64, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = family.dimension();
    let mut omega = vec![0.0; d];
    let mut j = vec![0.0; d];
    for n in 0..d {
        if n > 0 {
            omega[n] = relative_phase(family, n, 0, s, tol)?;
        }
        j[n] = j_integral(family, n, s, tol)?;
    }
    Ok((omega, j))
}

/// General-case expansion (`p = 0`) at `s`.
pub fn analyze(family: &dyn HamiltonianFamily, s: f64, opts: AptOptions) -> Result<Expansion> {
    let frame0 = transported_frame(family, 0.0)?;
    let frame_s = transported_frame(family, s)?;
    let (omega, j) = phases_and_j(family, s, opts.quad_tol)?;
    let b_0 = second_derivative_in_frame(family, &frame0)?;
    let b_s = second_derivative_in_frame(family, &frame_s)?;
    let d = family.dimension();
    let mut lead = vec![PhasedSum::new(); d];
    let mut next = vec![PhasedSum::new(); d];
    for n in 1..d {
        let l_s = frame_s.lambda(n, 0);
        let l_0 = frame0.lambda(n, 0);
        lead[n] = PhasedSum::new().with(l_s, omega[n]).with(-l_0, 0.0);

        let gap_s = frame_s.gap(n, 0);
        let gap_0 = frame0.gap(n, 0);
        let mut at_s = j[0] * l_s + lambda_dot(&frame_s, &b_s, n) / gap_s;
        let mut at_0 = -j[n] * l_0 - lambda_dot(&frame0, &b_0, n) / gap_0;
        let mut sum = PhasedSum::new();
        for k in 1..d {
            if k == n {
                continue;
            }
            at_s += frame_s.lambda(k, 0) * frame_s.couplings[(n, k)] / gap_s;
            at_0 += -frame0.lambda(k, 0) * frame0.couplings[(n, k)] / gap_0 + frame0.lambda(k, 0) * frame0.lambda(n, k);
            sum.push(-frame0.lambda(k, 0) * frame_s.lambda(n, k), omega[n] - omega[k]);
        }
        let mut b2 = PhasedSum::new().with(at_s, omega[n]).with(at_0, 0.0);
        for &(a, w) in sum.terms() {
            b2.push(a, w);
        }
        next[n] = b2;
    }
    Ok(Expansion { s, p: 0, lead, next, b0_first: j[0], omega, j, frame0, frame_s })
}

/// Boundary-cancelation expansion of order `p >= 1` at `s = 1`. Requires
/// `H^(j)(0) = H^(j)(1) = 0` for `1 <= j <= p`.
pub fn bc_expansion(family: &dyn HamiltonianFamily, p: u32, opts: AptOptions) -> Result<Expansion> {
    if p == 0 {
        return analyze(family, 1.0, opts);
    }
    let p_us = p as usize;
    for order in 1..=p_us {
        for s in [0.0, 1.0] {
            let norm = family.checked_derivative(s, order)?.norm();
            if norm > 1e-10 {
                return Err(Error::BoundaryConditionViolated { order, s, norm });
            }
        }
    }
    family.checked_derivative(0.5, p_us + 2)?;
    let frame0 = transported_frame(family, 0.0)?;
    let frame1 = transported_frame(family, 1.0)?;
    let (omega, j) = phases_and_j(family, 1.0, opts.quad_tol)?;
    // lambda_n0^(k) = -<n|H^(k+1)|0> / Delta^2 at the endpoints.
    let endpoint = |frame: &SpectralFrame, k: usize| -> Result<CMat> {
        let h = family.checked_derivative(frame.s, k + 1)?;
        Ok(frame.vectors.adjoint() * h * &frame.vectors)
    };
    let hp_0 = endpoint(&frame0, p_us)?;
    let hp_1 = endpoint(&frame1, p_us)?;
    let hq_0 = endpoint(&frame0, p_us + 1)?;
    let hq_1 = endpoint(&frame1, p_us + 1)?;
    let d = family.dimension();
    let mut lead = vec![PhasedSum::new(); d];
    let mut next = vec![PhasedSum::new(); d];
    let pi = p as i32;
    for n in 1..d {
        let g0 = frame0.gap(n, 0);
        let g1 = frame1.gap(n, 0);
        let lp_1 = -hp_1[(n, 0)] / (g1 * g1) / g1.powi(pi);
        let lp_0 = -hp_0[(n, 0)] / (g0 * g0) / g0.powi(pi);
        let lq_1 = -hq_1[(n, 0)] / (g1 * g1) / g1.powi(pi + 1);
        let lq_0 = -hq_0[(n, 0)] / (g0 * g0) / g0.powi(pi + 1);
        lead[n] = PhasedSum::new().with(lp_1, omega[n]).with(-lp_0, 0.0);
        next[n] = PhasedSum::new().with(lq_1 + j[0] * lp_1, omega[n]).with(-lq_0 - j[n] * lp_0, 0.0);
    }
    Ok(Expansion { s: 1.0, p, lead, next, b0_first: j[0], omega, j, frame0, frame_s: frame1 })
}

/// `b_n^(1)(s)` in phase-explicit form, plus the real `b_0^(1)(s)`.
pub fn b1(family: &dyn HamiltonianFamily, s: f64, opts: AptOptions) -> Result<(Vec<PhasedSum>, f64)> {
    let e = analyze(family, s, opts)?;
    Ok((e.lead, e.b0_first))
}

pub fn b2(family: &dyn HamiltonianFamily, s: f64, opts: AptOptions) -> Result<Vec<PhasedSum>> {
    Ok(analyze(family, s, opts)?.next)
}

pub fn leading_distance(family: &dyn HamiltonianFamily, s: f64, t: f64, opts: AptOptions) -> Result<f64> {
    positive_time(t)?;
    Ok(analyze(family, s, opts)?.leading(t))
}

pub fn distance_bounds(family: &dyn HamiltonianFamily, s: f64, t: f64, opts: AptOptions) -> Result<(f64, f64)> {
    positive_time(t)?;
    Ok(analyze(family, s, opts)?.bounds(t))
}

pub fn validity_time(family: &dyn HamiltonianFamily, s: f64, c: f64, opts: AptOptions) -> Result<f64> {
    analyze(family, s, opts)?.validity_time(c)
}

pub fn epsilon_tilde(family: &dyn HamiltonianFamily, s: f64, c: f64, opts: AptOptions) -> Result<f64> {
    analyze(family, s, opts)?.epsilon_tilde(c)
}

/// `(b_n^(p+1)(1), b_n^(p+2)(1))` in phase-explicit form.
pub fn bc_coefficients(family: &dyn HamiltonianFamily, p: u32, opts: AptOptions) -> Result<(Vec<PhasedSum>, Vec<PhasedSum>)> {
    let e = bc_expansion(family, p, opts)?;
    Ok((e.lead, e.next))
}

pub fn bc_tradeoff(family: &dyn HamiltonianFamily, p: u32, c: f64, opts: AptOptions) -> Result<TradeoffResult> {
    bc_expansion(family, p, opts)?.tradeoff(c)
}

fn positive_time(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("run time must be positive, got {t}")));
    }
    Ok(())
}
