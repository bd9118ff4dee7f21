//! Propagation of `(i/T) d/ds Psi = H(s) Psi` from the initial ground state.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::apt::recurrence::CoefficientTable;
use crate::error::{Error, Result};
use crate::family::HamiltonianFamily;
use crate::linalg::{c, eigh, eigvalsh, expm_neg_i, CMat, CVec, I};
use crate::spectral::degeneracy_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Fourth-order Magnus step with two Gauss points.
    #[default]
    Magnus4,
    /// Exponential of the midpoint Hamiltonian, second order.
    Midpoint,
}

impl Integrator {
    pub fn order(self) -> i32 {
        match self {
            Integrator::Magnus4 => 4,
            Integrator::Midpoint => 2,
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Magnus4 => "magnus4",
            Integrator::Midpoint => "midpoint",
        })
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnus4" => Ok(Integrator::Magnus4),
            "midpoint" => Ok(Integrator::Midpoint),
            other => Err(Error::config("integrator", format!("unknown integrator `{other}` (expected magnus4 or midpoint)"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Target global error of the state at the sample points.
    pub tol: f64,
    pub integrator: Integrator,
    /// Number of sample intervals; the trace holds `samples + 1` points.
    pub samples: usize,
    pub max_steps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { tol: 1e-10, integrator: Integrator::Magnus4, samples: 1, max_steps: 1 << 24 }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub t: f64,
    pub s: Vec<f64>,
    pub states: Vec<CVec>,
    pub norms: Vec<f64>,
    /// Bures angle to the instantaneous ground state.
    pub distances: Vec<f64>,
    pub steps: usize,
    /// Step-doubling estimate of the global state error.
    pub error_estimate: f64,
}

impl SimulationTrace {
    pub fn final_distance(&self) -> f64 {
        *self.distances.last().expect("trace is never empty")
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Writes `s,norm,distance` rows, plus real and imaginary state
    /// components when `components` is set.
    pub fn write_csv<W: Write>(&self, mut out: W, components: bool) -> std::io::Result<()> {
        write!(out, "s,norm,distance")?;
        if components {
            for k in 0..self.states[0].len() {
                write!(out, ",re{k},im{k}")?;
            }
        }
        writeln!(out)?;
        for i in 0..self.s.len() {
            write!(out, "{:?},{:?},{:?}", self.s[i], self.norms[i], self.distances[i])?;
            if components {
                for z in self.states[i].iter() {
                    write!(out, ",{:?},{:?}", z.re, z.im)?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Bures angle `arccos(|<b|a>| / |a|)` between an arbitrary nonzero `a` and
/// a state `b`. Both are normalized first; the angle is taken with `atan2`
/// so that small distances keep full relative precision.
pub fn bures_angle(a: &CVec, b: &CVec) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(Error::ZeroVector);
    }
    let a = a / c(na);
    let b = b / c(nb);
    let overlap = b.dotc(&a);
    let perp = &a - &b * overlap;
    Ok(perp.norm().atan2(overlap.norm()))
}

fn ground_state(family: &dyn HamiltonianFamily, s: f64) -> Result<CVec> {
    let (energies, vectors) = eigh(&family.hamiltonian(s));
    let threshold = degeneracy_threshold(&energies);
    let gap = energies[1] - energies[0];
    if gap <= threshold {
        return Err(Error::DegenerateGroundGap { s, gap, threshold });
    }
    Ok(vectors.column(0).into_owned())
}

fn spectral_spread(family: &dyn HamiltonianFamily) -> f64 {
    (0..=4)
        .map(|k| {
            let e = eigvalsh(&family.hamiltonian(k as f64 / 4.0));
            e[e.len() - 1] - e[0]
        })
        .fold(0.0, f64::max)
}

fn step_generator(family: &dyn HamiltonianFamily, integrator: Integrator, t: f64, s: f64, h: f64) -> CMat {
    match integrator {
        Integrator::Midpoint => family.hamiltonian(s + 0.5 * h) * c(t * h),
        Integrator::Magnus4 => {
            let d = 3f64.sqrt() / 6.0;
            let h1 = family.hamiltonian(s + (0.5 - d) * h);
            let h2 = family.hamiltonian(s + (0.5 + d) * h);
            let commutator = &h2 * &h1 - &h1 * &h2;
            (&h1 + &h2) * c(0.5 * t * h) - commutator * (I * (3f64.sqrt() / 12.0 * h * h * t * t))
        }
    }
}

/// States at the `samples + 1` sample points using `steps` uniform steps.
fn run(family: &dyn HamiltonianFamily, integrator: Integrator, t: f64, psi0: &CVec, samples: usize, steps: usize) -> Vec<CVec> {
    let h = 1.0 / steps as f64;
    let per_sample = steps / samples;
    let mut psi = psi0.clone();
    let mut out = Vec::with_capacity(samples + 1);
    out.push(psi.clone());
    for k in 0..steps {
        let g = step_generator(family, integrator, t, k as f64 * h, h);
        psi = expm_neg_i(&g) * psi;
        if (k + 1) % per_sample == 0 {
            out.push(psi.clone());
        }
    }
    out
}

/// Integrates from `|phi_0(0)>` over `s` in `[0, 1]` at run time `t`.
///
/// The step count doubles until two successive runs agree to `opts.tol`
/// after Richardson scaling by `2^order - 1`; the finer run is returned
/// unextrapolated so that every step stays exactly unitary.
pub fn propagate(family: &dyn HamiltonianFamily, t: f64, opts: SimOptions) -> Result<SimulationTrace> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("run time must be positive and finite, got {t}")));
    }
    if !(opts.tol > 0.0) || opts.samples == 0 {
        return Err(Error::InvalidArgument("tolerance must be positive and samples at least 1".into()));
    }
    let psi0 = ground_state(family, 0.0)?;
    let samples = opts.samples;
    let initial = (8.0 * t * spectral_spread(family)).ceil().max(64.0) as usize;
    let mut steps = initial.div_ceil(samples) * samples;
    if steps > opts.max_steps {
        return Err(Error::StepSizeUnderflow { t, max_steps: opts.max_steps });
    }
    let scale = 2f64.powi(opts.integrator.order()) - 1.0;
    let mut coarse = run(family, opts.integrator, t, &psi0, samples, steps);
    let (states, error_estimate) = loop {
        if 2 * steps > opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, max_steps: opts.max_steps });
        }
        steps *= 2;
        let fine = run(family, opts.integrator, t, &psi0, samples, steps);
        let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let estimate = diff / scale;
        if estimate <= opts.tol {
            break (fine, estimate);
        }
        coarse = fine;
    };
    let s: Vec<f64> = (0..=samples).map(|k| k as f64 / samples as f64).collect();
    let norms = states.iter().map(|x| x.norm()).collect();
    let distances = s
        .iter()
        .zip(&states)
        .map(|(&si, psi)| bures_angle(psi, &ground_state(family, si)?))
        .collect::<Result<_>>()?;
    Ok(SimulationTrace { t, s, states, norms, distances, steps, error_estimate })
}

/// `sum_n exp(-i T omega_n) (sum_{p <= order} (i/T)^p b_n^(p)) |phi_n>` at
/// grid index `i`. The result is not normalized.
pub fn truncated_state(table: &CoefficientTable, i: usize, t: f64, order: usize) -> Result<CVec> {
    if order > table.max_order {
        return Err(Error::InvalidArgument(format!("table holds orders up to {}, {order} requested", table.max_order)));
    }
    let d = table.dimension();
    let vectors = table.vectors(i);
    let mut out = CVec::zeros(d);
    for n in 0..d {
        let mut amplitude = c(0.0);
        for p in 0..=order {
            amplitude += (I / t).powi(p as i32) * table.aggregate(p, n, i, t);
        }
        out += vectors.column(n) * (Complex64::from_polar(1.0, -t * table.omega(i, n)) * amplitude);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apt::recurrence::{recurrence_table, RecurrenceOptions};
    use crate::apt::{leading_distance, AptOptions};
    use crate::family::ConstantFamily;
    use crate::grover::{grover_family, GroverMode};
    use crate::schedule::Schedule;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn bures_angle_basics() {
        let a = CVec::from_vec(vec![c(1.0), c(0.0)]);
        let b = CVec::from_vec(vec![c(0.0), I]);
        assert_eq!(bures_angle(&a, &a).unwrap(), 0.0);
        assert!((bures_angle(&a, &b).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let scaled = &a * Complex64::new(0.0, 3.0);
        assert!(bures_angle(&scaled, &a).unwrap().abs() < 1e-15);
        assert_eq!(bures_angle(&CVec::zeros(2), &a), Err(Error::ZeroVector));
        // Small angles keep relative precision.
        let eps: f64 = 1e-12;
        let tilted = CVec::from_vec(vec![c(eps.cos()), c(eps.sin())]);
        assert!((bures_angle(&tilted, &a).unwrap() / eps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_state_stays_put() {
        let h = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(2.0)]);
        let fam = ConstantFamily::new(h).unwrap();
        let trace = propagate(&fam, 37.0, SimOptions { samples: 8, ..Default::default() }).unwrap();
        assert!(trace.distances.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn norm_is_preserved() {
        let fam = grover_family(16, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let trace = propagate(&fam, 200.0, SimOptions { samples: 20, ..Default::default() }).unwrap();
        assert!(trace.max_norm_drift() < 1e-9);
        assert!(trace.distances.iter().all(|d| (0.0..=FRAC_PI_2).contains(d)));
        assert!(trace.error_estimate <= 1e-10);
    }

    #[test]
    fn error_shrinks_with_declared_order() {
        let fam = grover_family(8, Schedule::optimal(8).unwrap(), GroverMode::Reduced2).unwrap();
        let psi0 = ground_state(&fam, 0.0).unwrap();
        let t = 30.0;
        for integrator in [Integrator::Magnus4, Integrator::Midpoint] {
            let reference = run(&fam, Integrator::Magnus4, t, &psi0, 1, 1 << 14);
            let err = |n| (&run(&fam, integrator, t, &psi0, 1, n)[1] - &reference[1]).norm();
            let ratio = err(400) / err(800);
            let expected = 2f64.powi(integrator.order());
            assert!((ratio / expected - 1.0).abs() < 0.15, "{integrator}: {ratio}");
        }
    }

    #[test]
    fn tighter_tolerance_converges() {
        let fam = grover_family(8, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let reference = propagate(&fam, 50.0, SimOptions { tol: 1e-13, ..Default::default() }).unwrap();
        for tol in [1e-6, 1e-8, 1e-10] {
            let trace = propagate(&fam, 50.0, SimOptions { tol, ..Default::default() }).unwrap();
            let err = (&trace.states[1] - &reference.states[1]).norm();
            assert!(err <= 2.0 * tol, "tol {tol}: {err}");
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let fam = grover_family(8, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let err = propagate(&fam, 1e6, SimOptions { max_steps: 1000, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. }));
    }

    #[test]
    fn reduced_model_matches_full_model() {
        let n = 8;
        let sched = Schedule::optimal(n).unwrap();
        let reduced = grover_family(n, sched.clone(), GroverMode::Reduced2).unwrap();
        let full = grover_family(n, sched, GroverMode::Full { marked: 5 }).unwrap();
        let opts = SimOptions { tol: 1e-11, samples: 4, ..Default::default() };
        for t in [5.0, 40.0] {
            let a = propagate(&reduced, t, opts).unwrap();
            let b = propagate(&full, t, opts).unwrap();
            for (x, y) in a.distances.iter().zip(&b.distances) {
                assert!((x - y).abs() < 1e-9, "T={t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn truncated_state_orders() {
        let fam = grover_family(8, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let table = recurrence_table(&fam, 2, RecurrenceOptions { points: 401, ..Default::default() }).unwrap();
        let last = table.len() - 1;
        let phi0 = table.vectors(last).column(0).into_owned();
        let zeroth = truncated_state(&table, last, 80.0, 0).unwrap();
        assert!(bures_angle(&zeroth, &phi0).unwrap() < 1e-12);
        assert!((zeroth.norm() - 1.0).abs() < 1e-12);
        let opts = AptOptions { quad_tol: 1e-12 };
        let mut gaps = Vec::new();
        for t in [200.0, 400.0, 800.0] {
            let first = truncated_state(&table, last, t, 1).unwrap();
            let lead = leading_distance(&fam, 1.0, t, opts).unwrap();
            let numeric = propagate(&fam, t, SimOptions { tol: 1e-11, ..Default::default() }).unwrap();
            assert!((bures_angle(&first, &phi0).unwrap() - lead).abs() * t * t < 50.0);
            gaps.push((bures_angle(&first, &phi0).unwrap() - numeric.final_distance()).abs());
            assert!((first.norm() - 1.0).abs() < 10.0 / t);
        }
        // Differences to the numeric state fall off as 1/T^2.
        assert!(gaps[0] / gaps[2] > 8.0, "{gaps:?}");
    }
}
