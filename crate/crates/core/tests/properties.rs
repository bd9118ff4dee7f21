use std::f64::consts::FRAC_PI_2;

use adia_core::apt::{analyze, bc_expansion, AptOptions, PhasedSum};
use adia_core::grover::{closed_tradeoff, grover_family, GroverMode, J0Source};
use adia_core::linalg::{CMat, CVec};
use adia_core::sim::bures_angle;
use adia_core::spectral::spectral_frame;
use adia_core::{HamiltonianFamily, Schedule, ScheduleKind};
use num_complex::Complex64;
use proptest::prelude::*;

const OPTS: AptOptions = AptOptions { quad_tol: 1e-11 };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn beta_schedules_are_symmetric_and_monotone(p in 0u32..6, s in 0.0f64..=1.0) {
        let f = Schedule::beta(p);
        prop_assert!((f.value(s) + f.value(1.0 - s) - 1.0).abs() < 1e-12);
        prop_assert!(f.derivative(s, 1) >= -1e-12);
        prop_assert!((f.derivative(s, 1) - f.derivative(1.0 - s, 1)).abs() < 1e-9);
    }

    #[test]
    fn optimal_schedule_is_monotone(n in 2usize..2000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = Schedule::optimal(n).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(f.value(lo) <= f.value(hi) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&f.value(lo)));
    }

    #[test]
    fn couplings_are_anti_hermitian(n in 3usize..12, marked in 0usize..3, s in 0.01f64..0.99) {
        let fam = grover_family(n, Schedule::beta(1), GroverMode::Full { marked: marked % n }).unwrap();
        let frame = spectral_frame(&fam, s, None).unwrap();
        let m = &frame.couplings;
        prop_assert!((m + m.adjoint()).norm() < 1e-9 * m.norm().max(1.0));
        prop_assert!(frame.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn leading_term_lies_between_bounds(n in 2usize..200, t in 1.0f64..1e4, kind in 0usize..3) {
        let e = match kind {
            0 => analyze(&grover_family(n, Schedule::linear(), GroverMode::Reduced2).unwrap(), 1.0, OPTS).unwrap(),
            1 => analyze(&grover_family(n, Schedule::optimal(n).unwrap(), GroverMode::Reduced2).unwrap(), 1.0, OPTS).unwrap(),
            _ => bc_expansion(&grover_family(n, Schedule::beta(1), GroverMode::Reduced2).unwrap(), 1, OPTS).unwrap(),
        };
        let (lo, hi) = e.bounds(t);
        let lead = e.leading(t);
        prop_assert!(lo <= lead * (1.0 + 1e-12) && lead <= hi * (1.0 + 1e-12), "{} <= {} <= {}", lo, lead, hi);
    }

    #[test]
    fn validity_error_is_bound_at_validity_time(n in 4usize..4096, c in 1.0f64..200.0, kind in 0usize..4) {
        let (k, p) = [(ScheduleKind::Linear, 0), (ScheduleKind::Optimal, 0), (ScheduleKind::Beta, 1), (ScheduleKind::Beta, 2)][kind];
        let r = closed_tradeoff(n, k, c, p, J0Source::Approximate, 1e-10).unwrap();
        prop_assert!((r.bound(r.t_val) / r.eps_tilde - 1.0).abs() < 1e-12);
        let alpha = 0.37;
        let (eps, t) = r.validity_contract(alpha).unwrap();
        prop_assert!((r.bound(t) / eps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phased_sum_modulus_bounds(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.1f64..5.0, t in 0.0f64..100.0) {
        let sum = PhasedSum::new().with(Complex64::new(a, 0.5), w).with(Complex64::new(b, 0.0), 0.0);
        let v = sum.eval(t).norm();
        prop_assert!(sum.min_modulus() <= v + 1e-12 && v <= sum.max_modulus() + 1e-12);
    }

    #[test]
    fn bures_angle_is_a_bounded_symmetric_distance(re in proptest::collection::vec(-1.0f64..1.0, 8), im in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let a = CVec::from_iterator(4, (0..4).map(|k| Complex64::new(re[k], im[k])));
        let b = CVec::from_iterator(4, (4..8).map(|k| Complex64::new(re[k], im[k])));
        prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
        let d = bures_angle(&a, &b).unwrap();
        prop_assert!((0.0..=FRAC_PI_2 + 1e-15).contains(&d));
        prop_assert!((d - bures_angle(&b, &a).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn reduced_model_spectrum_is_a_subset_of_the_full_one() {
    let n = 16;
    let reduced = grover_family(n, Schedule::linear(), GroverMode::Reduced2).unwrap();
    let full = grover_family(n, Schedule::linear(), GroverMode::Full { marked: 7 }).unwrap();
    for s in [0.1, 0.5, 0.77] {
        let r = spectral_frame(&reduced, s, None).unwrap();
        let f = spectral_frame(&full, s, None).unwrap();
        assert!((r.energies[0] - f.energies[0]).abs() < 1e-12);
        assert!((r.ground_gap() - f.ground_gap()).abs() < 1e-12);
    }
    let h: CMat = full.hamiltonian(0.3);
    assert_eq!(h.nrows(), n);
}
