use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Largest elementwise deviation from Hermiticity relative to the largest entry.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let (values, vectors): (Vec<f64>, CMat) = if is_real(m) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(c))
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = CMat::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    (sorted_values, sorted_vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let mut values: Vec<f64> = if is_real(m) {
        m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    values
}

/// `exp(-i h)` for Hermitian `h`.
pub fn expm_neg_i(h: &CMat) -> CMat {
    if h.nrows() == 2 {
        // h = a0 + a . sigma
        let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
        let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
        let off = h[(0, 1)];
        let (ax, ay) = (off.re, -off.im);
        let norm = (ax * ax + ay * ay + az * az).sqrt();
        let (cos, sinc) = if norm < 1e-8 {
            (1.0 - norm * norm / 2.0, 1.0 - norm * norm / 6.0)
        } else {
            (norm.cos(), norm.sin() / norm)
        };
        let phase = Complex64::from_polar(1.0, -a0);
        let m00 = Complex64::new(cos, -sinc * az);
        let m11 = Complex64::new(cos, sinc * az);
        // -i sinc (ax sx + ay sy) off-diagonals
        let m01 = -I * sinc * Complex64::new(ax, -ay);
        let m10 = -I * sinc * Complex64::new(ax, ay);
        return CMat::from_row_slice(2, 2, &[phase * m00, phase * m01, phase * m10, phase * m11]);
    }
    let (values, vectors) = eigh(h);
    let n = h.nrows();
    let mut scaled = vectors.clone();
    for (j, e) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -e);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Unitary polar factor of a square matrix, the closest unitary in
/// Frobenius norm.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    u * v_t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMat::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        (&a + a.adjoint()) * c(0.5)
    }

    #[test]
    fn eigh_reconstructs() {
        for n in [2, 3, 5] {
            let h = random_hermitian(n, n as u64);
            let (e, v) = eigh(&h);
            assert!(e.windows(2).all(|w| w[0] <= w[1]));
            let d = CMat::from_diagonal(&DVector::from_iterator(n, e.iter().map(|&x| c(x))));
            let rebuilt = &v * d * v.adjoint();
            assert!((rebuilt - &h).norm() < 1e-12);
            assert!((v.adjoint() * &v - CMat::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_exponential_matches_general_path() {
        let h = random_hermitian(2, 7) * c(3.0);
        let fast = expm_neg_i(&h);
        let (values, vectors) = eigh(&h);
        let d = CMat::from_diagonal(&DVector::from_iterator(
            2,
            values.iter().map(|&e| Complex64::from_polar(1.0, -e)),
        ));
        let slow = &vectors * d * vectors.adjoint();
        assert!((fast - slow).norm() < 1e-13);
    }

    #[test]
    fn exponential_is_unitary() {
        let h = random_hermitian(4, 3) * c(10.0);
        let u = expm_neg_i(&h);
        assert!((u.adjoint() * &u - CMat::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn polar_factor_of_unitary_is_itself() {
        let u = expm_neg_i(&random_hermitian(3, 11));
        assert!((polar_unitary(&u) - &u).norm() < 1e-12);
        let scaled = &u * c(2.5);
        assert!((polar_unitary(&scaled) - &u).norm() < 1e-12);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let mut h = random_hermitian(3, 5);
        assert!(hermiticity_defect(&h) < 1e-15);
        h[(0, 1)] += c(1e-3);
        assert!(hermiticity_defect(&h) > 1e-4);
    }
}
