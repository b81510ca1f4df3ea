use std::sync::Arc;

use twophase::radial::RadialTwoPhase;
use twophase::twosigma::{
    dual_solve, locking_field, one_phase_residual, scores_to_csv, serrin_reduction, two_sigma_deviation, two_sigma_score,
};
use twophase::{generate_mesh, Error, StarBoundary, TwoPhaseConfig};

fn config(offset: f64) -> TwoPhaseConfig {
    TwoPhaseConfig::new(
        StarBoundary::circle([0.0, 0.0], 1.0).unwrap(),
        vec![StarBoundary::circle([offset, 0.0], 0.5).unwrap()],
        2.0,
    )
    .unwrap()
}

fn pair(offset: f64, h: f64) -> twophase::twosigma::DualSolvePair {
    dual_solve(&Arc::new(generate_mesh(&config(offset), h, 2).unwrap()), 2.0, 3.0).unwrap()
}

#[test]
fn concentric_locking_field_is_the_radial_constant() {
    let p = pair(0.0, 0.05);
    let lock = locking_field(&p).unwrap();
    // in the core u_σ = (1 − ρ²)/4 + (ρ² − r²)/(4σ), so αu_α − βu_β = (α − β)u_shell(ρ)
    let ua = RadialTwoPhase::planar(0.5, 1.0, 2.0).unwrap();
    let expected = (2.0 - 3.0) * ua.value(0.5).unwrap();
    let c = &lock.components[0];
    assert!((c.mean - expected).abs() < 1e-6, "{} vs {expected}", c.mean);
    assert!(lock.e_core < 1e-10);
    // Cauchy–Schwarz plus Poincaré keeps the spread tiny when the energy is
    assert!(c.std <= (lock.e_core * c.area).sqrt() / c.area + 1e-6);
    assert!(c.trace_mismatch < 1e-6);
}

#[test]
fn inputs_are_validated() {
    let mesh = Arc::new(generate_mesh(&config(0.0), 0.1, 2).unwrap());
    assert!(dual_solve(&mesh, 2.0, 2.0).is_err());
    assert!(dual_solve(&mesh, -1.0, 2.0).is_err());
}

#[test]
fn reduction_is_one_phase_and_refines() {
    let coarse = serrin_reduction(&pair(0.0, 0.05)).unwrap();
    let fine = serrin_reduction(&pair(0.0, 0.0125)).unwrap();
    assert!(fine.residual < coarse.residual, "{} vs {}", fine.residual, coarse.residual);
    assert!((coarse.flux.mean() + 0.5).abs() < 1e-4);
    assert!(coarse.flux_deviation < 1e-2);
    // the reduction of a concentric pair is the one-phase torsion function of the disk
    let w_err = coarse
        .w
        .mesh()
        .nodes()
        .iter()
        .zip(coarse.w.values())
        .map(|(p, v)| (v - (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0).abs())
        .fold(0.0, f64::max);
    assert!(w_err < 1e-5, "{w_err:e}");
    assert!(one_phase_residual(&coarse.w).unwrap() == coarse.residual);
}

#[test]
fn unlocked_pair_is_not_reduced() {
    assert!(matches!(serrin_reduction(&pair(0.3, 0.05)), Err(Error::ReductionInvalid { .. })));
}

#[test]
fn score_grows_with_the_offset() {
    let scores: Vec<f64> = [0.0, 0.1, 0.2].iter().map(|&o| two_sigma_deviation(&config(o), 2.0, 3.0, 0.05, 2).unwrap().total).collect();
    assert!(scores[0] < 1e-2, "{scores:?}");
    assert!(scores[0] < scores[1] && scores[1] < scores[2], "{scores:?}");
}

#[test]
fn score_is_rotation_invariant() {
    let cfg = config(0.2);
    let a = two_sigma_deviation(&cfg, 2.0, 3.0, 0.05, 2).unwrap();
    let b = two_sigma_deviation(&cfg.rotated(std::f64::consts::FRAC_PI_2, [0.0, 0.0]), 2.0, 3.0, 0.05, 2).unwrap();
    assert!((a.total - b.total).abs() < 5e-2 * a.total, "{} vs {}", a.total, b.total);
    assert!((a.e_core - b.e_core).abs() < 5e-2 * a.e_core);
}

#[test]
fn scores_csv_layout() {
    let s = two_sigma_score(&pair(0.0, 0.1)).unwrap();
    let csv = scores_to_csv(&[(0.0, s), (0.1, s)]);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "offset,score_alpha_flux,score_beta_flux,E_core,total");
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1].split(',').count(), 5);
}
