mod common;

use flockstab_core::assembly::BoundaryType;
use flockstab_core::conditions::{conditions, necessary_condition_value, DEFAULT_CONDITION_TOL};
use flockstab_core::spectral::{a0_constant_term, a0_derivative_at_zero, char_poly};
use flockstab_core::{Arrangement, FlockSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arrangement() -> impl Strategy<Value = Arrangement> {
    prop_oneof![Just(Arrangement::TriatomicNN), Just(Arrangement::DiatomicNNN)]
}

fn spec_and_rng() -> impl Strategy<Value = (FlockSpec, ChaCha8Rng)> {
    (arrangement(), any::<u64>()).prop_map(|(a, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (common::random_spec(&mut rng, a), rng)
    })
}

fn boundary() -> impl Strategy<Value = BoundaryType> {
    prop_oneof![Just(BoundaryType::TypeI), Just(BoundaryType::TypeII)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn row_sums_vanish((spec, _) in spec_and_rng(), n in 3usize..9) {
        prop_assert_eq!(common::check_row_sums(&spec, n), Ok(()));
    }

    #[test]
    fn spectra_are_conjugate_closed((spec, _) in spec_and_rng(), n in 3usize..10) {
        prop_assert_eq!(common::check_conjugate_closed(&spec, n), Ok(()));
    }

    #[test]
    fn mode_roots_match_dense_eigenvalues((spec, _) in spec_and_rng(), n in 3usize..7) {
        let d = common::pairing_distance(&common::mode_spectrum(&spec, n), &common::dense_spectrum(&spec, n));
        prop_assert!(d < 1e-6, "pairing distance {d:e}");
    }

    #[test]
    fn trajectories_are_linear((spec, mut rng) in spec_and_rng(), n in 3usize..6, bc in boundary()) {
        prop_assert_eq!(common::check_linearity(&mut rng, &spec, n, bc), Ok(()));
    }

    #[test]
    fn trajectories_are_translation_invariant((spec, mut rng) in spec_and_rng(), n in 3usize..6, bc in boundary()) {
        prop_assert_eq!(common::check_translation(&mut rng, &spec, n, bc), Ok(()));
    }

    #[test]
    fn halving_dt_barely_moves_the_magnitude((spec, _) in spec_and_rng(), n in 3usize..6, bc in boundary()) {
        if let Some(d) = common::refinement_change(&spec, n, bc, 20.0) {
            prop_assert!(d < 1e-3, "relative change {d:e}");
        }
    }

    #[test]
    fn closed_form_derivative_matches_differences((spec, _) in spec_and_rng()) {
        let h = 1e-5;
        let fd = (a0_constant_term(&spec, h) - a0_constant_term(&spec, -h)) / (2.0 * h);
        let closed = a0_derivative_at_zero(&spec);
        prop_assert!((fd - closed).norm() <= 1e-6 * closed.norm());
    }

    #[test]
    fn constant_term_matches_determinant((spec, _) in spec_and_rng(), phi in 0.0..std::f64::consts::TAU) {
        let det = char_poly(&spec, phi).coeffs[0];
        let closed = a0_constant_term(&spec, phi);
        prop_assert!((det - closed).norm() <= 1e-12 * (1.0 + closed.norm()));
    }

    #[test]
    fn conditions_survive_cyclic_relabeling((spec, _) in spec_and_rng(), shift in 0usize..3) {
        let rotated = spec.rotated(shift);
        let a = conditions(&spec, DEFAULT_CONDITION_TOL);
        let b = conditions(&rotated, DEFAULT_CONDITION_TOL);
        prop_assert_eq!(a.overall, b.overall);
        let (x, y) = (necessary_condition_value(&spec), necessary_condition_value(&rotated));
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn json_round_trip((spec, _) in spec_and_rng()) {
        let back = FlockSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back, spec);
    }
}
