mod common;

use waveplanes::field::Fusion;

fn check(fusion: Fusion) {
    let report = common::gradient_check(fusion, 11, 1e-3);
    eprintln!("{fusion:?}: {} parameters, max rel err {:.3e} ({})", report.checked, report.max_rel, report.worst);
    assert!(report.checked > 1500);
    assert!(report.max_rel <= 1e-3, "{fusion:?}: {}", report.worst);
}

#[test]
fn hp_gradients_match_finite_differences() {
    check(Fusion::Hp);
}

#[test]
fn zmm_gradients_match_finite_differences() {
    check(Fusion::Zmm);
}

#[test]
fn zam_gradients_match_finite_differences() {
    check(Fusion::Zam);
}
