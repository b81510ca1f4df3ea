use std::sync::Arc;

use twophase::fem::solve_torsion;
use twophase::sweep::{
    dumbbell_fixture, first_contact, reflected_difference, reflected_difference_unchecked, sweep, tentacle_scan, SweepOptions,
    TerminalCase,
};
use twophase::{generate_mesh, Error, StarBoundary, TwoPhaseConfig};

fn disk_with_core(center: [f64; 2], rho: f64) -> TwoPhaseConfig {
    TwoPhaseConfig::new(StarBoundary::circle([0.0, 0.0], 1.0).unwrap(), vec![StarBoundary::circle(center, rho).unwrap()], 2.0)
        .unwrap()
}

#[test]
fn first_contact_is_the_support_value() {
    let b = StarBoundary::circle([0.3, -0.1], 0.7).unwrap();
    for phi in [0.0, 1.0, 2.5, -2.0] {
        let e = [f64::cos(phi), f64::sin(phi)];
        let expected = 0.3 * e[0] - 0.1 * e[1] + 0.7;
        assert!((first_contact(&b, e) - expected).abs() < 1e-6);
    }
}

#[test]
fn concentric_sweep_stops_at_the_core() {
    // the reflected cap {x·e > λ} of the unit disk reaches r = 0.5 at 2λ − 1 = 0.5
    let cfg = disk_with_core([0.0, 0.0], 0.5);
    for phi in [0.0, 0.7, 2.0] {
        let r = sweep(&cfg, [f64::cos(phi), f64::sin(phi)], &SweepOptions::default()).unwrap();
        assert_eq!(r.terminal_case, TerminalCase::CoreTouch);
        assert!((r.terminal_lambda - 0.75).abs() < 1e-5, "{}", r.terminal_lambda);
        assert!((r.first_contact_lambda - 1.0).abs() < 1e-9);
    }
}

#[test]
fn off_center_core_touches_at_its_far_side() {
    // core (0.2, 0) of radius 0.3 reaches x = 0.5 along e = (1, 0)
    let r = sweep(&disk_with_core([0.2, 0.0], 0.3), [1.0, 0.0], &SweepOptions::default()).unwrap();
    assert_eq!(r.terminal_case, TerminalCase::CoreTouch);
    assert!((r.terminal_lambda - 0.75).abs() < 1e-5);
    assert!((r.witness[0] - 0.5).abs() < 1e-3 && r.witness[1].abs() < 1e-3, "{:?}", r.witness);
    // the opposite direction reaches x = −0.1 at 2λ − 1 = 0.1 measured along −e
    let back = sweep(&disk_with_core([0.2, 0.0], 0.3), [-1.0, 0.0], &SweepOptions::default()).unwrap();
    assert!((back.terminal_lambda - 0.55).abs() < 1e-5, "{}", back.terminal_lambda);
}

#[test]
fn dumbbell_has_a_tentacle_along_its_axis() {
    let cfg = dumbbell_fixture();
    let r = sweep(&cfg, [0.0, 1.0], &SweepOptions::default()).unwrap();
    assert!(r.terminal_case.is_tentacle(), "{:?}", r.terminal_case);
    let v = tentacle_scan(&cfg, 16, &SweepOptions::default()).unwrap();
    assert!(v.has_tentacle);
    assert_eq!(v.reports.len(), 16);
    assert!(v.offending.iter().any(|e| e[0].abs() < 1e-9 && (e[1] - 1.0).abs() < 1e-9));
}

#[test]
fn disk_scan_has_no_tentacle() {
    let v = tentacle_scan(&disk_with_core([0.0, 0.0], 0.5), 16, &SweepOptions::default()).unwrap();
    assert!(!v.has_tentacle && v.offending.is_empty());
    assert!(v.reports.iter().all(|r| r.terminal_case == TerminalCase::CoreTouch));
}

#[test]
fn reflected_difference_is_positive_before_contact() {
    let cfg = disk_with_core([0.0, 0.0], 0.5);
    let mesh = Arc::new(generate_mesh(&cfg, 0.05, 2).unwrap());
    let u = solve_torsion(&mesh, 2.0).unwrap();
    for lambda in [0.8, 0.9] {
        let w = reflected_difference(&u, &cfg, [1.0, 0.0], lambda, 0.02).unwrap();
        assert!(!w.samples.is_empty());
        assert!(w.min > -1e-8, "λ = {lambda}: {}", w.min);
        assert!(w.plane_max < 1e-8);
    }
    // too deep: the cap meets the core
    assert!(matches!(reflected_difference(&u, &cfg, [1.0, 0.0], 0.6, 0.02), Err(Error::Precondition(_))));
    // symmetry axis: w vanishes identically
    let axis = reflected_difference_unchecked(&u, &cfg, [1.0, 0.0], 0.0, 0.05).unwrap();
    assert!(axis.samples.iter().all(|(_, w)| w.abs() < 1e-6));
}
