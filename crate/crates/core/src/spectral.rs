//! Instantaneous eigenframes, couplings and dynamical phases.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::family::HamiltonianFamily;
use crate::linalg::{c, eigh, eigvalsh, polar_unitary, CMat, CVec};
use crate::par::{self, Execution};
use crate::quadrature;

/// Relative threshold below which two levels count as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// Eigen-data of `H(s)` at a single `s`.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    pub s: f64,
    /// Ascending eigenvalues `E_n`.
    pub energies: Vec<f64>,
    /// Column `n` is `|phi_n>`.
    pub vectors: CMat,
    /// `<phi_n| dH/ds |phi_k>`.
    pub dh: CMat,
    /// `M_nk = <phi_n| d phi_k / ds>`, zero on the diagonal.
    pub couplings: CMat,
    /// Half-open index ranges of degenerate levels.
    pub blocks: Vec<(usize, usize)>,
}

impl SpectralFrame {
    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    /// `E_n - E_k`.
    pub fn gap(&self, n: usize, k: usize) -> f64 {
        self.energies[n] - self.energies[k]
    }

    pub fn ground_gap(&self) -> f64 {
        self.gap(1, 0)
    }

    pub fn vector(&self, n: usize) -> CVec {
        self.vectors.column(n).into_owned()
    }

    pub fn degenerate(&self, n: usize, k: usize) -> bool {
        n != k && self.blocks.iter().any(|&(a, b)| (a..b).contains(&n) && (a..b).contains(&k))
    }

    /// `lambda_nk = M_nk / Delta_nk`, zero for degenerate pairs.
    pub fn lambda(&self, n: usize, k: usize) -> Complex64 {
        if n == k || self.degenerate(n, k) {
            return Complex64::new(0.0, 0.0);
        }
        self.couplings[(n, k)] / self.gap(n, k)
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.dimension();
        (self.vectors.adjoint() * &self.vectors - CMat::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `sum_n E_n |phi_n><phi_n|`.
    pub fn reconstruct(&self) -> CMat {
        let d = self.dimension();
        let mut scaled = self.vectors.clone();
        for (n, &e) in self.energies.iter().enumerate() {
            for i in 0..d {
                scaled[(i, n)] *= e;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

struct RawFrame {
    s: f64,
    energies: Vec<f64>,
    vectors: CMat,
    blocks: Vec<(usize, usize)>,
}

pub fn degeneracy_threshold(energies: &[f64]) -> f64 {
    DEGENERACY_RTOL * energies.iter().map(|e| e.abs()).fold(f64::MIN_POSITIVE, f64::max)
}

fn diagonalize(family: &dyn HamiltonianFamily, s: f64) -> Result<RawFrame> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s = {s} lies outside [0, 1]")));
    }
    let (energies, mut vectors) = eigh(&family.hamiltonian(s));
    let threshold = degeneracy_threshold(&energies);
    let gap = energies[1] - energies[0];
    if gap <= threshold {
        return Err(Error::DegenerateGroundGap { s, gap, threshold });
    }
    let mut blocks = Vec::new();
    let mut start = 0;
    for n in 1..=energies.len() {
        if n == energies.len() || energies[n] - energies[n - 1] > threshold {
            if n - start > 1 {
                blocks.push((start, n));
            }
            start = n;
        }
    }
    for &(a, b) in &blocks {
        resolve_block(family, s, &mut vectors, a, b);
    }
    Ok(RawFrame { s, energies, vectors, blocks })
}

/// Picks the basis of a degenerate block that continues smoothly into the
/// neighbouring nondegenerate levels, using the lowest derivative of `H`
/// that splits the block.
fn resolve_block(family: &dyn HamiltonianFamily, s: f64, vectors: &mut CMat, a: usize, b: usize) {
    let vb = vectors.columns(a, b - a).into_owned();
    let sigma = if s < 1.0 { 1.0 } else { -1.0 };
    for j in 1..=family.max_derivative().min(8) {
        let hj = family.derivative(s, j);
        let projected = vb.adjoint() * &hj * &vb;
        let (q, w) = eigh(&projected);
        let spread = q[q.len() - 1] - q[0];
        if spread > 1e-9 * hj.norm() && spread > 1e-13 {
            let sign = if j % 2 == 1 { sigma } else { 1.0 };
            let mut order: Vec<usize> = (0..q.len()).collect();
            order.sort_by(|&x, &y| (sign * q[x]).total_cmp(&(sign * q[y])));
            let rotated = &vb * w;
            for (slot, &k) in order.iter().enumerate() {
                vectors.set_column(a + slot, &rotated.column(k));
            }
            return;
        }
    }
}

fn align(raw: &mut RawFrame, prev: Option<&CMat>, real: bool) {
    let d = raw.energies.len();
    let in_block = |n: usize| raw.blocks.iter().any(|&(a, b)| (a..b).contains(&n));
    for n in 0..d {
        if in_block(n) {
            continue;
        }
        let col = raw.vectors.column(n).into_owned();
        let phase = match prev {
            Some(p) => {
                let ov = p.column(n).dotc(&col);
                if ov.norm() > 1e-12 {
                    ov.conj() / ov.norm()
                } else {
                    canonical_phase(&col)
                }
            }
            None => canonical_phase(&col),
        };
        raw.vectors.set_column(n, &(col * phase));
    }
    if let Some(p) = prev {
        for &(a, b) in &raw.blocks {
            let vb = raw.vectors.columns(a, b - a).into_owned();
            let pb = p.columns(a, b - a).into_owned();
            let u = polar_unitary(&(vb.adjoint() * pb));
            let aligned = vb * u;
            raw.vectors.columns_mut(a, b - a).copy_from(&aligned);
        }
    }
    if real {
        raw.vectors.iter_mut().for_each(|z| z.im = 0.0);
    }
}

/// Phase that makes the largest-modulus component real and positive.
fn canonical_phase(v: &CVec) -> Complex64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-8)).copied().unwrap_or(c(1.0));
    pivot.conj() / pivot.norm()
}

fn finish(family: &dyn HamiltonianFamily, raw: RawFrame) -> Result<SpectralFrame> {
    let RawFrame { s, energies, vectors, blocks } = raw;
    let hdot = family.checked_derivative(s, 1)?;
    let dh = vectors.adjoint() * &hdot * &vectors;
    let d = energies.len();
    let scale = hdot.norm().max(1.0);
    let mut couplings = CMat::zeros(d, d);
    for n in 0..d {
        for k in 0..d {
            if n == k {
                continue;
            }
            let same_block = blocks.iter().any(|&(a, b)| (a..b).contains(&n) && (a..b).contains(&k));
            if same_block {
                let element = dh[(n, k)].norm();
                if element > 1e-9 * scale {
                    return Err(Error::DegenerateCoupling { s, n, k, element });
                }
            } else {
                couplings[(n, k)] = -dh[(n, k)] / (energies[n] - energies[k]);
            }
        }
    }
    Ok(SpectralFrame { s, energies, vectors, dh, couplings, blocks })
}

/// Eigenframe of `H(s)`; phases follow `prev` when given, otherwise the
/// largest component of each eigenvector is made real and positive.
pub fn spectral_frame(family: &dyn HamiltonianFamily, s: f64, prev: Option<&SpectralFrame>) -> Result<SpectralFrame> {
    let mut raw = diagonalize(family, s)?;
    align(&mut raw, prev.map(|p| &p.vectors), family.is_real());
    finish(family, raw)
}

/// Frames on an ordered grid with a continuous gauge. Diagonalization runs
/// through `exec`; phase alignment is a sequential pass.
pub fn track_frames(family: &dyn HamiltonianFamily, grid: &[f64], exec: Execution) -> Result<Vec<SpectralFrame>> {
    let raws: Vec<Result<RawFrame>> = par::map(exec, grid, |&s| diagonalize(family, s));
    let mut aligned = Vec::with_capacity(grid.len());
    let mut prev: Option<CMat> = None;
    for raw in raws {
        let mut raw = raw?;
        align(&mut raw, prev.as_ref(), family.is_real());
        prev = Some(raw.vectors.clone());
        aligned.push(raw);
    }
    aligned.into_iter().map(|raw| finish(family, raw)).collect()
}

/// Frame at `s` whose gauge is carried continuously from the canonical gauge
/// at `s = 0`. Steps are bisected whenever an eigenvector overlap between
/// neighbouring frames drops below 0.95.
pub fn transported_frame(family: &dyn HamiltonianFamily, s: f64) -> Result<SpectralFrame> {
    let start = diagonalize(family, 0.0).map(|mut raw| {
        align(&mut raw, None, family.is_real());
        raw
    })?;
    if s == 0.0 {
        return finish(family, start);
    }
    let base = if family.is_real() { 1.0 / 32.0 } else { 1.0 / 2048.0 };
    let mut current = start;
    let mut h = base;
    while current.s < s {
        let next_s = if current.s + h >= s { s } else { current.s + h };
        let mut raw = diagonalize(family, next_s)?;
        align(&mut raw, Some(&current.vectors), family.is_real());
        let worst = (0..raw.energies.len())
            .filter(|&n| !raw.blocks.iter().any(|&(a, b)| (a..b).contains(&n)))
            .map(|n| current.vectors.column(n).dotc(&raw.vectors.column(n)).norm())
            .fold(1.0, f64::min);
        if worst < 0.95 && h > 1e-9 {
            h *= 0.5;
            continue;
        }
        current = raw;
        h = (2.0 * h).min(base);
    }
    finish(family, current)
}

/// `omega_n(s) = int_0^s E_n`.
pub fn dynamical_phase(family: &dyn HamiltonianFamily, n: usize, s: f64, tol: f64) -> Result<f64> {
    if n >= family.dimension() {
        return Err(Error::InvalidArgument(format!("level {n} out of range")));
    }
    quadrature::integrate(|x| eigvalsh(&family.hamiltonian(x))[n], 0.0, s, tol)
}

/// `omega_nm(s) = int_0^s (E_n - E_m)`.
pub fn relative_phase(family: &dyn HamiltonianFamily, n: usize, m: usize, s: f64, tol: f64) -> Result<f64> {
    let d = family.dimension();
    if n >= d || m >= d {
        return Err(Error::InvalidArgument(format!("levels ({n}, {m}) out of range")));
    }
    quadrature::integrate(
        |x| {
            let e = eigvalsh(&family.hamiltonian(x));
            e[n] - e[m]
        },
        0.0,
        s,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::ConstantFamily;
    use crate::grover::{grover_family, GroverMode};
    use crate::schedule::Schedule;

    #[test]
    fn grover_gap_at_midpoint() {
        let fam = grover_family(4, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let frame = spectral_frame(&fam, 0.5, None).unwrap();
        assert!((frame.ground_gap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn frame_invariants() {
        let fam = grover_family(8, Schedule::optimal(8).unwrap(), GroverMode::Full { marked: 3 }).unwrap();
        for &s in &[0.0, 0.2, 0.5, 0.81, 1.0] {
            let frame = spectral_frame(&fam, s, None).unwrap();
            assert!(frame.orthonormality_defect() < 1e-10);
            let h = fam.hamiltonian(s);
            assert!((frame.reconstruct() - &h).norm() / h.norm() < 1e-10);
            for n in 0..8 {
                assert_eq!(frame.couplings[(n, n)], c(0.0));
                for k in 0..8 {
                    assert!((frame.couplings[(n, k)] + frame.couplings[(k, n)].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coupling_matches_finite_difference_oracle() {
        let n = 8usize;
        let fam = grover_family(n, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let s = 0.3;
        let h = 1e-5;
        let mid = spectral_frame(&fam, s, None).unwrap();
        let lo = spectral_frame(&fam, s - h, Some(&mid)).unwrap();
        let hi = spectral_frame(&fam, s + h, Some(&mid)).unwrap();
        let dphi0 = (hi.vector(0) - lo.vector(0)) / c(2.0 * h);
        let fd = mid.vector(1).dotc(&dphi0);
        assert!((fd - mid.couplings[(1, 0)]).norm() < 1e-8);
        let q = (n as f64 - 1.0).sqrt() / n as f64;
        let gap = mid.ground_gap();
        assert!((mid.couplings[(1, 0)].norm() - q / (gap * gap)).abs() < 1e-12);
    }

    #[test]
    fn hellmann_feynman() {
        let fam = grover_family(16, Schedule::beta(2), GroverMode::Reduced2).unwrap();
        let h = 1e-5;
        for &s in &[0.1, 0.4, 0.7] {
            let frame = spectral_frame(&fam, s, None).unwrap();
            let ep = eigvalsh(&fam.hamiltonian(s + h));
            let em = eigvalsh(&fam.hamiltonian(s - h));
            for n in 0..2 {
                let fd = (ep[n] - em[n]) / (2.0 * h);
                assert!((fd - frame.dh[(n, n)].re).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gauge_continuity_is_second_order() {
        let fam = grover_family(8, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let defect = |h: f64| {
            let a = spectral_frame(&fam, 0.4, None).unwrap();
            let b = spectral_frame(&fam, 0.4 + h, Some(&a)).unwrap();
            (a.vector(0).dotc(&b.vector(0)) - c(1.0)).norm()
        };
        let ratio = defect(1e-2) / defect(5e-3);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn degenerate_ground_state_is_rejected() {
        let fam = ConstantFamily::new(CMat::identity(3, 3)).unwrap();
        assert!(matches!(spectral_frame(&fam, 0.5, None), Err(Error::DegenerateGroundGap { .. })));
    }

    #[test]
    fn full_model_endpoint_block_is_resolved() {
        let fam = grover_family(8, Schedule::linear(), GroverMode::Full { marked: 0 }).unwrap();
        let reduced = grover_family(8, Schedule::linear(), GroverMode::Reduced2).unwrap();
        for &s in &[0.0, 1.0] {
            let full = spectral_frame(&fam, s, None).unwrap();
            let red = spectral_frame(&reduced, s, None).unwrap();
            assert!(!full.blocks.is_empty());
            assert!((full.couplings[(1, 0)].norm() - red.couplings[(1, 0)].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn transported_frame_matches_tracking() {
        let fam = grover_family(32, Schedule::optimal(32).unwrap(), GroverMode::Reduced2).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
        let tracked = track_frames(&fam, &grid, Execution::Sequential).unwrap();
        let direct = transported_frame(&fam, 1.0).unwrap();
        let last = tracked.last().unwrap();
        assert!((&last.vectors - &direct.vectors).norm() < 1e-12);
        let parallel = track_frames(&fam, &grid, Execution::Parallel(0)).unwrap();
        assert!((&parallel[400].vectors - &last.vectors).norm() == 0.0);
    }

    #[test]
    fn dynamical_phase_examples() {
        let fam = ConstantFamily::new(CMat::from_diagonal(&CVec::from_vec(vec![c(0.0), c(1.0)]))).unwrap();
        assert!((dynamical_phase(&fam, 1, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(dynamical_phase(&fam, 1, 0.0, 1e-12).unwrap(), 0.0);

        let g = grover_family(2, Schedule::linear(), GroverMode::Reduced2).unwrap();
        let w = relative_phase(&g, 1, 0, 1.0, 1e-12).unwrap();
        // Composite Simpson with 2 * 10^4 panels on the gap sqrt(1 - 2 f (1 - f)).
        let m = 20_000;
        let h = 1.0 / m as f64;
        let gap = |s: f64| (1.0 - 2.0 * s * (1.0 - s)).sqrt();
        let mut simpson = gap(0.0) + gap(1.0);
        for i in 1..m {
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * gap(i as f64 * h);
        }
        simpson *= h / 3.0;
        assert!((w - simpson).abs() < 1e-12);
    }
}
