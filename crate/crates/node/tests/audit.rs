use pmpir::audit::{audit_placement, audit_privacy, audit_with, LeakyMasks, PASS_FRACTION};
use pmpir_core::layered::SeededMasks;
use pmpir_core::pir_msr::Strategy;
use pmpir_core::pm_codes::{Family, Geometry};
use pmpir_core::Field;

#[test]
fn honest_masks_pass_at_q5() {
    let g = Geometry::new(Family::Mbr, 6, 3, 4).unwrap();
    let placement = audit_placement(&g, Strategy::Auto).unwrap();
    let r = audit_privacy(&g, 5, 2, 5_000, 1, &placement).unwrap();
    assert_eq!(r.structural_failures, 0);
    // n servers x k queries x F files x S stripes
    assert_eq!(r.cells, 6 * 3 * 2 * 3);
    assert!(r.pass_fraction >= PASS_FRACTION, "{r:?}");
    assert!(r.passed());
}

#[test]
fn msr_audit_passes() {
    let g = Geometry::new(Family::Msr, 6, 3, 4).unwrap();
    let placement = audit_placement(&g, Strategy::Auto).unwrap();
    let r = audit_privacy(&g, 5, 3, 3_000, 2, &placement).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn planted_leak_is_detected() {
    let g = Geometry::new(Family::Mbr, 6, 3, 4).unwrap();
    let f = Field::new(5).unwrap();
    let placement = audit_placement(&g, Strategy::Auto).unwrap();
    let r = audit_with(&g, f, 2, 1_000, 3, &placement, |s, t| Box::new(LeakyMasks::new(f, s, t))).unwrap();
    assert!(r.structural_failures > 0);
    assert!(!r.structural_pass);
    assert!(!r.passed());
}

#[test]
fn mismatched_generator_fails_structurally() {
    // honest masks, but seeded differently from the replay
    let g = Geometry::new(Family::Mbr, 6, 3, 4).unwrap();
    let f = Field::new(5).unwrap();
    let placement = audit_placement(&g, Strategy::Auto).unwrap();
    let r = audit_with(&g, f, 2, 50, 3, &placement, |s, _| Box::new(SeededMasks::new(f, s ^ 1))).unwrap();
    assert_eq!(r.structural_failures, 50);
}
