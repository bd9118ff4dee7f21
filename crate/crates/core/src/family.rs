//! Driven Hamiltonian families `H(s)` on `s` in `[0, 1]`.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, hermiticity_defect, is_real, CMat};
use crate::schedule::Schedule;

/// A Hermitian matrix-valued function of `s` with analytic derivatives.
pub trait HamiltonianFamily: Send + Sync {
    fn dimension(&self) -> usize;

    /// Highest derivative order `j` for which [`Self::derivative`] is exact.
    fn max_derivative(&self) -> usize;

    /// `d^j H / ds^j` at `s`. Callers must respect [`Self::max_derivative`].
    fn derivative(&self, s: f64, j: usize) -> CMat;

    /// Whether every derivative is a real symmetric matrix.
    fn is_real(&self) -> bool;

    fn hamiltonian(&self, s: f64) -> CMat {
        self.derivative(s, 0)
    }

    fn checked_derivative(&self, s: f64, j: usize) -> Result<CMat> {
        if j > self.max_derivative() {
            return Err(Error::DerivativeUnavailable { requested: j, available: self.max_derivative() });
        }
        Ok(self.derivative(s, j))
    }
}

/// `H(s) = (1 - f(s)) H_i + f(s) H_f`.
#[derive(Debug, Clone)]
pub struct InterpolatedFamily {
    initial: CMat,
    target: CMat,
    difference: CMat,
    schedule: Schedule,
    real: bool,
}

impl InterpolatedFamily {
    pub fn new(initial: CMat, target: CMat, schedule: Schedule) -> Result<Self> {
        let d = initial.nrows();
        if d < 2 || !initial.is_square() || target.shape() != initial.shape() {
            return Err(Error::InvalidArgument(format!(
                "endpoint Hamiltonians must be square, equal-sized and at least 2x2 (got {:?} and {:?})",
                initial.shape(),
                target.shape()
            )));
        }
        for (name, m) in [("initial", &initial), ("final", &target)] {
            let defect = hermiticity_defect(m);
            if defect > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "{name} Hamiltonian is not Hermitian (relative defect {defect:.3e})"
                )));
            }
        }
        let real = is_real(&initial) && is_real(&target);
        let difference = &target - &initial;
        Ok(InterpolatedFamily { initial, target, difference, schedule, real })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn initial(&self) -> &CMat {
        &self.initial
    }

    pub fn target(&self) -> &CMat {
        &self.target
    }

    pub fn with_schedule(&self, schedule: Schedule) -> Self {
        InterpolatedFamily { schedule, ..self.clone() }
    }
}

impl HamiltonianFamily for InterpolatedFamily {
    fn dimension(&self) -> usize {
        self.initial.nrows()
    }

    fn max_derivative(&self) -> usize {
        self.schedule.max_derivative()
    }

    fn derivative(&self, s: f64, j: usize) -> CMat {
        if j == 0 {
            let f = self.schedule.value(s);
            &self.initial * c(1.0 - f) + &self.target * c(f)
        } else {
            &self.difference * c(self.schedule.derivative(s, j))
        }
    }

    fn is_real(&self) -> bool {
        self.real
    }
}

/// `H(s) = H_0` for all `s`.
#[derive(Debug, Clone)]
pub struct ConstantFamily {
    h: CMat,
}

impl ConstantFamily {
    pub fn new(h: CMat) -> Result<Self> {
        if h.nrows() < 2 || !h.is_square() || hermiticity_defect(&h) > 1e-12 {
            return Err(Error::InvalidArgument("constant family needs a Hermitian matrix of size >= 2".into()));
        }
        Ok(ConstantFamily { h })
    }
}

impl HamiltonianFamily for ConstantFamily {
    fn dimension(&self) -> usize {
        self.h.nrows()
    }

    fn max_derivative(&self) -> usize {
        usize::MAX
    }

    fn derivative(&self, _s: f64, j: usize) -> CMat {
        if j == 0 {
            self.h.clone()
        } else {
            CMat::zeros(self.h.nrows(), self.h.ncols())
        }
    }

    fn is_real(&self) -> bool {
        is_real(&self.h)
    }
}

/// Parses the endpoint matrices of a custom family.
///
/// The text format is a header line `d m` with `m = 2`, followed by `d` rows
/// for `H_i` and `d` rows for `H_f`. Entries are whitespace separated and
/// written `re` or `re,im`. Blank lines and lines starting with `#` are
/// ignored.
pub fn parse_matrix_pair(text: &str) -> Result<(CMat, CMat)> {
    let field = "matrix-file";
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::config(field, "file is empty"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::config(field, format!("header must be `d m`, found `{header}`")));
    }
    let d: usize = dims[0].parse().map_err(|_| Error::config(field, format!("bad dimension `{}`", dims[0])))?;
    let m: usize = dims[1].parse().map_err(|_| Error::config(field, format!("bad matrix count `{}`", dims[1])))?;
    if d < 2 {
        return Err(Error::config(field, format!("dimension must be at least 2, got {d}")));
    }
    if m != 2 {
        return Err(Error::config(
            field,
            format!("exactly two matrices (H_i and H_f) are supported, header declares {m}"),
        ));
    }
    let mut entries = Vec::with_capacity(2 * d * d);
    for (lineno, line) in lines {
        let row: Vec<Complex64> = line
            .split_whitespace()
            .map(|tok| parse_entry(tok).ok_or_else(|| Error::config(field, format!("line {}: bad entry `{tok}`", lineno + 1))))
            .collect::<Result<_>>()?;
        if row.len() != d {
            return Err(Error::config(field, format!("line {}: expected {d} entries, found {}", lineno + 1, row.len())));
        }
        entries.extend(row);
    }
    if entries.len() != 2 * d * d {
        return Err(Error::config(field, format!("expected {} rows, found {}", 2 * d, entries.len() / d)));
    }
    let hi = CMat::from_row_slice(d, d, &entries[..d * d]);
    let hf = CMat::from_row_slice(d, d, &entries[d * d..]);
    for (name, h) in [("H_i", &hi), ("H_f", &hf)] {
        let defect = hermiticity_defect(h);
        if defect > 1e-12 {
            return Err(Error::config(field, format!("{name} is not Hermitian (relative defect {defect:.3e})")));
        }
    }
    Ok((hi, hf))
}

fn parse_entry(tok: &str) -> Option<Complex64> {
    match tok.split_once(',') {
        Some((re, im)) => Some(Complex64::new(re.parse().ok()?, im.parse().ok()?)),
        None => Some(Complex64::new(tok.parse().ok()?, 0.0)),
    }
}

pub fn family_from_matrix_file(path: &Path, schedule: Schedule) -> Result<InterpolatedFamily> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("matrix-file", format!("cannot read {}: {e}", path.display())))?;
    let (hi, hf) = parse_matrix_pair(&text)?;
    InterpolatedFamily::new(hi, hf, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_derivatives() {
        let hi = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let hf = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let fam = InterpolatedFamily::new(hi.clone(), hf.clone(), Schedule::beta(1)).unwrap();
        assert!(fam.is_real());
        assert!((fam.hamiltonian(0.0) - &hi).norm() < 1e-15);
        assert!((fam.hamiltonian(1.0) - &hf).norm() < 1e-15);
        assert!(fam.derivative(0.0, 1).norm() < 1e-15);
        let h = 1e-6;
        let fd = (fam.hamiltonian(0.3 + h) - fam.hamiltonian(0.3 - h)) / c(2.0 * h);
        assert!((fd - fam.derivative(0.3, 1)).norm() < 1e-8);
    }

    #[test]
    fn rejects_non_hermitian() {
        let hi = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.5), c(0.0)]);
        assert!(InterpolatedFamily::new(hi.clone(), hi, Schedule::linear()).is_err());
    }

    #[test]
    fn parses_complex_entries_and_comments() {
        let text = "# pair\n2 2\n0 0,-1\n0,1 0\n\n1 0\n0 -1\n";
        let (hi, hf) = parse_matrix_pair(text).unwrap();
        assert_eq!(hi[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(hf[(1, 1)], c(-1.0));
    }

    #[test]
    fn matrix_file_errors_name_the_field() {
        for bad in ["", "2 3\n", "1 2\n0\n0\n", "2 2\n0 1\n1 0\n1 0\n", "2 2\n0 x\n0 0\n0 0\n0 0\n", "2 2\n0 1\n2 0\n0 0\n0 0\n"] {
            let err = parse_matrix_pair(bad).unwrap_err();
            assert!(err.is_config(), "{bad:?} gave {err}");
            assert!(err.to_string().contains("matrix-file"));
        }
    }

    #[test]
    fn derivative_limit_is_enforced() {
        let fam = InterpolatedFamily::new(CMat::identity(2, 2), CMat::zeros(2, 2), Schedule::optimal(4).unwrap()).unwrap();
        assert!(fam.checked_derivative(0.5, 7).is_ok());
        let ode = crate::grover::schedule_from_constant_fisher(8, 1e-10).unwrap();
        let fam = fam.with_schedule(ode);
        assert!(matches!(fam.checked_derivative(0.5, 5), Err(Error::DerivativeUnavailable { .. })));
    }
}
