use flockstab_core::conditions::{conditions, Overall, DEFAULT_CONDITION_TOL};
use flockstab_core::rootcurves::{
    cross_angle, log_grid, orthogonality_angle, track_branches, truncation_discrepancy, SpecFamily,
};
use flockstab_core::spectral::{assess_stability, DEFAULT_CLASSIFY_TOL};
use flockstab_core::{fixtures, StabilityStatus};

#[test]
fn stable_fixture_is_linearly_stable_and_satisfies_conditions() {
    let spec = fixtures::figure1();
    let (_, v) = assess_stability(&spec, 60, DEFAULT_CLASSIFY_TOL).unwrap();
    assert_eq!(v.status, StabilityStatus::Stable);
    assert_eq!(v.zero_multiplicity, 2);
    assert_eq!(
        conditions(&spec, DEFAULT_CONDITION_TOL).overall,
        Overall::NecessaryConditionsHold
    );
}

#[test]
fn unstable_fixture_agrees_across_modules() {
    let spec = fixtures::figure2();
    let (_, v) = assess_stability(&spec, 60, DEFAULT_CLASSIFY_TOL).unwrap();
    assert_eq!(v.status, StabilityStatus::Unstable);
    assert!(v.max_real_part > 0.0);
    assert_eq!(
        conditions(&spec, DEFAULT_CONDITION_TOL).overall,
        Overall::InstabilityCertified
    );
}

#[test]
fn unstable_fixture_small_roots_form_a_cross() {
    let spec = fixtures::figure2();
    let fam = SpecFamily(&spec);
    let tr = track_branches(&fam, &log_grid(1e-6, 1e-2, 41)).unwrap();
    let o = orthogonality_angle(&tr.plus, &tr.minus);
    assert!(o.deviation_deg < 2.0, "{o:?}");
    let cross = cross_angle(&fam, 1e-6).unwrap();
    assert!((cross.angle_deg - 90.0).abs() < 2.0, "{cross:?}");
    for curve in [&tr.plus, &tr.minus] {
        assert!(truncation_discrepancy(&fam, curve, tr.c).unwrap() < 1e-2);
    }
}

#[test]
fn fixture_three_c_certifies_instability() {
    let r = conditions(&fixtures::figure3c(), DEFAULT_CONDITION_TOL);
    assert_eq!(r.overall, Overall::InstabilityCertified);
}
