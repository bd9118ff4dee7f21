//! General-order coefficients `b_nm^(p)(s)` on a uniform grid.
//!
//! Off-diagonal entries follow `Delta_nm b_nm^(p+1) = d/ds b_nm^(p) +
//! sum_{k != n} M_nk b_km^(p)`; diagonal entries come from integrating
//! `d/ds b_nn^(p) = -sum_{k != n} M_nk b_kn^(p)` with `b_n^(p)(0) = 0`.

use num_complex::Complex64;

use super::{PhasedSum, VANISHING_NORM};
use crate::error::{Error, Result};
use crate::family::HamiltonianFamily;
use crate::linalg::{c, CMat};
use crate::par::Execution;
use crate::quadrature::cumulative_uniform;
use crate::spectral::{degeneracy_threshold, track_frames};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct RecurrenceOptions {
    /// Grid points of the coarse grid; the check grid has `2 points - 1`.
    pub points: usize,
    pub s_end: f64,
    /// Largest accepted grid-halving change, relative to `max(1, max |b|)`.
    pub tolerance: f64,
    pub exec: Execution,
}

impl Default for RecurrenceOptions {
    fn default() -> Self {
        RecurrenceOptions { points: 1001, s_end: 1.0, tolerance: 1e-6, exec: Execution::default() }
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub grid: Vec<f64>,
    pub max_order: usize,
    /// `b[p][i]` is the matrix `b_nm^(p)(s_i)`.
    b: Vec<Vec<CMat>>,
    /// `omega[i][n] = omega_n(s_i)`.
    omega: Vec<Vec<f64>>,
    vectors: Vec<CMat>,
    /// Estimated absolute error per order from grid halving.
    pub grid_error: Vec<f64>,
}

impl CoefficientTable {
    pub fn dimension(&self) -> usize {
        self.omega[0].len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Grid index of `s`, if `s` is a grid point.
    pub fn index(&self, s: f64) -> Option<usize> {
        let h = self.grid[1] - self.grid[0];
        let i = (s / h).round();
        if i < 0.0 || i as usize >= self.grid.len() {
            return None;
        }
        let i = i as usize;
        ((self.grid[i] - s).abs() <= 1e-12).then_some(i)
    }

    pub fn entry(&self, order: usize, n: usize, m: usize, i: usize) -> Complex64 {
        self.b[order][i][(n, m)]
    }

    pub fn omega(&self, i: usize, n: usize) -> f64 {
        self.omega[i][n]
    }

    pub fn vectors(&self, i: usize) -> &CMat {
        &self.vectors[i]
    }

    /// `b_n^(p)(s_i) = sum_m exp(i T omega_nm) b_nm^(p)` in phase-explicit form.
    pub fn aggregate_phased(&self, order: usize, n: usize, i: usize) -> PhasedSum {
        let mut sum = PhasedSum::new();
        for m in 0..self.dimension() {
            let v = self.b[order][i][(n, m)];
            if v != c(0.0) {
                sum.push(v, self.omega[i][n] - self.omega[i][m]);
            }
        }
        sum
    }

    pub fn aggregate(&self, order: usize, n: usize, i: usize, t: f64) -> Complex64 {
        self.aggregate_phased(order, n, i).eval(t)
    }
}

fn stencil_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let f = |i: usize| values[i];
    let mut out = vec![c(0.0); n];
    let k = 1.0 / (12.0 * h);
    for i in 0..n {
        out[i] = if i >= 2 && i + 2 < n {
            (f(i - 2) - f(i - 1) * 8.0 + f(i + 1) * 8.0 - f(i + 2)) * k
        } else if i == 0 {
            (f(0) * -25.0 + f(1) * 48.0 - f(2) * 36.0 + f(3) * 16.0 - f(4) * 3.0) * k
        } else if i == 1 {
            (f(0) * -3.0 - f(1) * 10.0 + f(2) * 18.0 - f(3) * 6.0 + f(4)) * k
        } else if i == n - 2 {
            -(f(n - 1) * -3.0 - f(n - 2) * 10.0 + f(n - 3) * 18.0 - f(n - 4) * 6.0 + f(n - 5)) * k
        } else {
            -(f(n - 1) * -25.0 + f(n - 2) * 48.0 - f(n - 3) * 36.0 + f(n - 4) * 16.0 - f(n - 5) * 3.0) * k
        };
    }
    out
}

fn build(family: &dyn HamiltonianFamily, max_order: usize, points: usize, s_end: f64, exec: Execution) -> Result<CoefficientTable> {
    let h = s_end / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| if i + 1 == points { s_end } else { i as f64 * h }).collect();
    let frames = track_frames(family, &grid, exec)?;
    let d = family.dimension();
    let mut omega = vec![vec![0.0; d]; points];
    for n in 0..d {
        let energies: Vec<f64> = frames.iter().map(|f| f.energies[n]).collect();
        for (i, w) in cumulative_uniform(&energies, h).into_iter().enumerate() {
            omega[i][n] = w;
        }
    }
    let mut b0 = CMat::zeros(d, d);
    b0[(0, 0)] = c(1.0);
    let mut b = vec![vec![b0; points]];
    for _ in 1..=max_order {
        let prev = b.last().expect("order 0 present");
        let mut next: Vec<CMat> = frames.iter().zip(prev).map(|(f, x)| &f.couplings * x).collect();
        for n in 0..d {
            for m in 0..d {
                if n == m {
                    continue;
                }
                let series: Vec<Complex64> = prev.iter().map(|x| x[(n, m)]).collect();
                let deriv = stencil_derivative(&series, h);
                for (i, frame) in frames.iter().enumerate() {
                    let gap = frame.gap(n, m);
                    let threshold = degeneracy_threshold(&frame.energies);
                    next[i][(n, m)] = if gap.abs() <= threshold { c(0.0) } else { (deriv[i] + next[i][(n, m)]) / gap };
                }
            }
        }
        // (M b)_nn skips k = n because M_nn = 0, so the diagonal can be filled last.
        for n in 0..d {
            let integrand: Vec<Complex64> =
                frames.iter().zip(&next).map(|(f, x)| (0..d).map(|k| f.couplings[(n, k)] * x[(k, n)]).sum()).collect();
            let re = cumulative_uniform(&integrand.iter().map(|z| z.re).collect::<Vec<_>>(), h);
            let im = cumulative_uniform(&integrand.iter().map(|z| z.im).collect::<Vec<_>>(), h);
            let start: Complex64 = -(0..d).filter(|&m| m != n).map(|m| next[0][(n, m)]).sum::<Complex64>();
            for i in 0..points {
                next[i][(n, n)] = start - Complex64::new(re[i], im[i]);
            }
        }
        b.push(next);
    }
    let vectors = frames.into_iter().map(|f| f.vectors).collect();
    Ok(CoefficientTable { grid, max_order, b, omega, vectors, grid_error: vec![0.0; max_order + 1] })
}

/// Builds the table on `opts.points` and on the halved grid, returns the
/// finer one and fails with [`Error::GridTooCoarse`] when the two differ by
/// more than `opts.tolerance`.
pub fn recurrence_table(family: &dyn HamiltonianFamily, max_order: usize, opts: RecurrenceOptions) -> Result<CoefficientTable> {
    if max_order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("recurrence order {max_order} exceeds {MAX_ORDER}")));
    }
    if opts.points < 9 {
        return Err(Error::InvalidArgument(format!("need at least 9 grid points, got {}", opts.points)));
    }
    if !(opts.s_end > 0.0 && opts.s_end <= 1.0) {
        return Err(Error::InvalidArgument(format!("s_end must lie in (0, 1], got {}", opts.s_end)));
    }
    family.checked_derivative(0.5, max_order.max(1))?;
    let coarse = build(family, max_order, opts.points, opts.s_end, opts.exec)?;
    let mut fine = build(family, max_order, 2 * opts.points - 1, opts.s_end, opts.exec)?;
    for order in 1..=max_order {
        let mut change: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for i in 0..coarse.len() {
            let a = &coarse.b[order][i];
            let b = &fine.b[order][2 * i];
            change = change.max((a - b).iter().map(|z| z.norm()).fold(0.0, f64::max));
            scale = scale.max(b.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        // Fourth-order scheme: the fine-grid error is about change / 15.
        fine.grid_error[order] = change / 15.0;
        if change / scale > opts.tolerance {
            return Err(Error::GridTooCoarse { order, change: change / scale, limit: opts.tolerance });
        }
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceExpansion {
    pub leading: f64,
    pub next: f64,
}

/// Two-term expansion of the distance at grid index `i` and run time `t`,
/// with `p` the number of vanishing leading orders.
pub fn distance_expansion(table: &CoefficientTable, t: f64, p: usize, i: usize) -> Result<DistanceExpansion> {
    if p + 2 > table.max_order {
        return Err(Error::InvalidArgument(format!("table holds orders up to {}, {} needed", table.max_order, p + 2)));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("run time must be positive, got {t}")));
    }
    let d = table.dimension();
    for q in 1..=p {
        let size = (1..d).map(|n| table.aggregate_phased(q, n, i).max_modulus()).fold(0.0, f64::max);
        if size > 10.0 * table.grid_error[q].max(1e-12) {
            return Err(Error::NonVanishingLowerOrder { order: q, s: table.grid[i], size });
        }
    }
    let lead: Vec<Complex64> = (1..d).map(|n| table.aggregate(p + 1, n, i, t)).collect();
    let next: Vec<Complex64> = (1..d).map(|n| table.aggregate(p + 2, n, i, t)).collect();
    let s: f64 = lead.iter().map(|z| z.norm_sqr()).sum();
    let power = p as i32 + 1;
    let leading = s.sqrt() / t.powi(power);
    let next_term = if s.sqrt() <= VANISHING_NORM {
        next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / t.powi(power + 1)
    } else {
        let cross: f64 = lead.iter().zip(&next).map(|(a, b)| (a.conj() * b).im).sum();
        let b0 = if p == 0 { table.aggregate(1, 0, i, t).im } else { 0.0 };
        -(cross / s.sqrt() - s.sqrt() * b0) / t.powi(power + 1)
    };
    Ok(DistanceExpansion { leading, next: next_term })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apt::{analyze, AptOptions};
    use crate::grover::{grover_family, GroverMode};
    use crate::schedule::Schedule;

    #[test]
    fn stencil_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let v: Vec<Complex64> = (0..n).map(|i| c((2.0 * i as f64 * h).sin())).collect();
            let d = stencil_derivative(&v, h);
            (0..n).map(|i| (d[i].re - 2.0 * (2.0 * i as f64 * h).cos()).abs()).fold(0.0, f64::max)
        };
        assert!(err(41) / err(81) > 14.0);
    }

    #[test]
    fn first_order_structure() {
        let fam = grover_family(8, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let table = recurrence_table(&fam, 2, RecurrenceOptions { points: 401, ..Default::default() }).unwrap();
        for i in [0, 100, 800] {
            assert_eq!(table.entry(0, 0, 0, i), c(1.0));
            assert_eq!(table.entry(0, 1, 1, 0), c(0.0));
        }
        let lambda0 = table.entry(1, 1, 0, 0);
        for i in [0, 250, 800] {
            // b_11^(1)(s) = -lambda_10(0)
            assert!((table.entry(1, 1, 1, i) + lambda0).norm() < 1e-9);
            for q in 1..=2 {
                for n in 0..2 {
                    if i == 0 {
                        assert!(table.aggregate(q, n, 0, 17.0).norm() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn b00_is_j0() {
        let fam = grover_family(8, Schedule::optimal(8).unwrap(), GroverMode::Reduced2).unwrap();
        let table = recurrence_table(&fam, 2, RecurrenceOptions { points: 401, ..Default::default() }).unwrap();
        let e = analyze(&fam, 1.0, AptOptions { quad_tol: 1e-12 }).unwrap();
        let last = table.len() - 1;
        let b00 = table.entry(1, 0, 0, last);
        assert!(b00.im.abs() < 1e-9);
        assert!((b00.re - e.j[0]).abs() < 1e-8);
    }

    #[test]
    fn matches_closed_coefficients() {
        let opts = AptOptions { quad_tol: 1e-12 };
        for (fam, p) in [
            (grover_family(8, Schedule::optimal(8).unwrap(), GroverMode::Reduced2).unwrap(), 0),
            (grover_family(4, Schedule::linear(), GroverMode::Full { marked: 2 }).unwrap(), 0),
            (grover_family(8, Schedule::beta(1), GroverMode::Reduced2).unwrap(), 1),
        ] {
            let table = recurrence_table(&fam, p + 2, RecurrenceOptions { points: 801, ..Default::default() }).unwrap();
            let e = if p == 0 { analyze(&fam, 1.0, opts).unwrap() } else { crate::apt::bc_expansion(&fam, p as u32, opts).unwrap() };
            let last = table.len() - 1;
            for t in [3.0, 17.5, 60.0] {
                let x = distance_expansion(&table, t, p, last).unwrap();
                assert!((x.leading - e.leading(t)).abs() <= 1e-6 * e.leading(t).max(1e-3 / t.powi(p as i32 + 1)), "p={p} t={t}");
                let floor = 1e-9 / t.powi(p as i32 + 2);
                assert!((x.next - e.next_term(t)).abs() <= 1e-6 * e.next_term(t).abs() + floor, "p={p} t={t}: {} vs {}", x.next, e.next_term(t));
            }
        }
    }

    #[test]
    fn beta_lower_orders_vanish_at_the_end() {
        let fam = grover_family(8, Schedule::beta(2), GroverMode::Reduced2).unwrap();
        let table = recurrence_table(&fam, 4, RecurrenceOptions { points: 2001, ..Default::default() }).unwrap();
        let last = table.len() - 1;
        assert!(distance_expansion(&table, 10.0, 2, last).is_ok());
        let mid = table.index(0.5).unwrap();
        assert!(matches!(distance_expansion(&table, 10.0, 2, mid), Err(Error::NonVanishingLowerOrder { order: 1, .. })));
    }

    #[test]
    fn orders_above_limit_are_rejected() {
        let fam = grover_family(8, Schedule::linear(), GroverMode::Reduced2).unwrap();
        assert!(recurrence_table(&fam, 5, RecurrenceOptions::default()).is_err());
        let coarse = recurrence_table(&fam, 3, RecurrenceOptions { points: 9, tolerance: 1e-12, ..Default::default() });
        assert!(matches!(coarse, Err(Error::GridTooCoarse { .. })));
    }
}
