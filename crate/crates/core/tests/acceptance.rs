//! Acceptance criteria 1–14. Each test prints one PASS/FAIL line; the line is
//! written straight to stdout so it shows up without `--nocapture`.

use std::io::Write;

use worm_bergman::acceptance::run_criterion;

fn check(id: u8) {
    let report = run_criterion(id);
    let mut out = std::io::stdout().lock();
    writeln!(out, "{report}").unwrap();
    out.flush().unwrap();
    assert!(report.passed, "{report}");
}

#[test]
fn criterion_01_spectral_symbol() {
    check(1);
}

#[test]
fn criterion_02_second_coefficient() {
    check(2);
}

#[test]
fn criterion_03_representation_agreement() {
    check(3);
}

#[test]
fn criterion_04_asymptotic_order() {
    check(4);
}

#[test]
fn criterion_05_large_lambda_limit() {
    check(5);
}

#[test]
fn criterion_06_small_lambda_behavior() {
    check(6);
}

#[test]
fn criterion_07_decay_rate() {
    check(7);
}

#[test]
fn criterion_08_series_truncation() {
    check(8);
}

#[test]
fn criterion_09_transformation_law() {
    check(9);
}

#[test]
fn criterion_10_reproducing_property() {
    check(10);
}

#[test]
fn criterion_11_boundary_profile() {
    check(11);
}

#[test]
fn criterion_12_norm_classification() {
    check(12);
}

#[test]
fn criterion_13_irregularity_probes() {
    check(13);
}

#[test]
fn criterion_14_gram_positivity() {
    check(14);
}
