use std::sync::Arc;

use twophase::ntd::{assemble_ntd, ntd_spectrum, theorem1_experiment};
use twophase::radial::disk_ntd_eigenvalue;
use twophase::shape::{
    classify_critical_shape, finite_difference_probe, first_shape_derivative, fourier_mode, hausdorff_to_circle,
    optimize_rigidity, shape_hessian, Evidence, FourierMode, OptimizerOptions, PerturbationPath, StopReason, TorsionState,
    DEFAULT_OVERDETERMINED_TOL,
};
use twophase::{generate_mesh, Error, StarBoundary, TwoPhaseConfig};

fn off_center() -> TwoPhaseConfig {
    TwoPhaseConfig::new(
        StarBoundary::circle([0.0, 0.0], 1.0).unwrap(),
        vec![StarBoundary::circle([0.2, 0.0], 0.4).unwrap()],
        3.0,
    )
    .unwrap()
}

#[test]
fn fourier_modes_parse_and_print() {
    let m: FourierMode = "cos3".parse().unwrap();
    assert_eq!(m, FourierMode::cos(3));
    assert_eq!("sin12".parse::<FourierMode>().unwrap().to_string(), "sin12");
    for bad in ["cos0", "tan2", "cos", "sin-1"] {
        assert!(bad.parse::<FourierMode>().is_err(), "{bad}");
    }
    assert_eq!(FourierMode::up_to(3).len(), 6);
}

#[test]
fn first_derivative_agrees_with_remeshed_differences() {
    let cfg = off_center();
    let st = TorsionState::for_config(&cfg, 0.05, 2).unwrap();
    for m in [FourierMode::cos(1), FourierMode::cos(2), FourierMode::sin(1)] {
        let hn = fourier_mode(st.boundary(), m);
        let analytic = first_shape_derivative(&st, &hn).unwrap();
        let path = PerturbationPath::new(cfg.clone(), hn, true).unwrap();
        let fd = finite_difference_probe(&path, &[-0.02, -0.01, 0.01, 0.02], 0.05, 2).unwrap();
        let scale = analytic.abs().max(1e-3);
        assert!((analytic - fd.dt).abs() < 2e-2 * scale, "{m}: {analytic} vs {}", fd.dt);
    }
}

#[test]
fn concentric_disks_are_critical() {
    let st = TorsionState::for_config(&TwoPhaseConfig::concentric(0.5, 1.0, 2.0).unwrap(), 0.05, 2).unwrap();
    for m in FourierMode::up_to(4) {
        let d = first_shape_derivative(&st, &fourier_mode(st.boundary(), m)).unwrap();
        assert!(d.abs() < 1e-6, "{m}: {d:e}");
    }
}

#[test]
fn second_derivative_needs_a_critical_base() {
    let st = TorsionState::for_config(&off_center(), 0.05, 2).unwrap();
    let hn = fourier_mode(st.boundary(), FourierMode::cos(2));
    assert!(matches!(shape_hessian(&st, &hn, DEFAULT_OVERDETERMINED_TOL), Err(Error::BaseNotCritical { .. })));
    assert!(matches!(
        classify_critical_shape(&st, &FourierMode::up_to(2), 1e-8, DEFAULT_OVERDETERMINED_TOL),
        Err(Error::BaseNotCritical { .. })
    ));
}

#[test]
fn stiff_core_gives_maximizer_evidence() {
    let st = TorsionState::for_config(&TwoPhaseConfig::concentric(0.5, 1.0, 2.0).unwrap(), 0.05, 2).unwrap();
    let c = classify_critical_shape(&st, &FourierMode::up_to(4), 1e-8, DEFAULT_OVERDETERMINED_TOL).unwrap();
    assert_eq!(c.evidence, Evidence::MaximizerEvidence);
    assert!(c.max < 0.0 && c.values.len() == 8);
    // sin and cos of one frequency are rotations of each other
    for k in 1..=4 {
        let get = |m| c.values.iter().find(|(x, _)| *x == m).unwrap().1;
        let (a, b) = (get(FourierMode::cos(k)), get(FourierMode::sin(k)));
        assert!((a - b).abs() < 1e-4 * a.abs(), "k = {k}: {a} vs {b}");
    }
}

#[test]
fn hausdorff_distance_to_circles() {
    let c = StarBoundary::circle([0.1, 0.0], 0.8).unwrap();
    assert!(hausdorff_to_circle(&c, [0.1, 0.0]) < 1e-9);
    let b = StarBoundary::new([0.0, 0.0], 1.0, vec![0.0, 0.1], vec![]).unwrap();
    let d = hausdorff_to_circle(&b, [0.0, 0.0]);
    // equal-area radius √(1 + 0.1²/2); the farthest point is the waist at r = 0.9
    let expected = (1.0f64 + 0.005).sqrt() - 0.9;
    assert!((d - expected).abs() < 1e-9, "{d} vs {expected}");
}

#[test]
fn optimizer_raises_rigidity_at_fixed_area() {
    let cfg = TwoPhaseConfig::new(
        StarBoundary::circle([0.0, 0.0], 1.0).unwrap(),
        vec![StarBoundary::circle([0.15, 0.0], 0.4).unwrap()],
        2.0,
    )
    .unwrap();
    let opts = OptimizerOptions { steps: 3, h: 0.08, ..OptimizerOptions::default() };
    let traj = optimize_rigidity(&cfg, &opts).unwrap();
    assert!(matches!(traj.stop, StopReason::StepsExhausted | StopReason::Converged));
    let (first, last) = (&traj.steps[0], traj.last());
    assert!(last.rigidity > first.rigidity);
    assert!(last.flux_deviation < first.flux_deviation);
    assert!((last.area - first.area).abs() < 1e-8 * first.area);
    assert_eq!(traj.to_jsonl().lines().count(), traj.steps.len());
}

#[test]
fn ntd_spectrum_matches_the_disk_modes() {
    for sigma in [0.5, 2.0] {
        let mesh = Arc::new(generate_mesh(&TwoPhaseConfig::concentric(0.5, 1.0, sigma).unwrap(), 0.05, 2).unwrap());
        let op = assemble_ntd(&mesh, sigma).unwrap();
        assert!(op.is_nearly_symmetric());
        let spec = ntd_spectrum(&op, 8).unwrap();
        for (i, lambda) in spec.eigenvalues.iter().enumerate() {
            let k = (i / 2 + 1) as u32;
            let exact = disk_ntd_eigenvalue(k, 0.5, sigma);
            assert!((lambda - exact).abs() < 1e-5 * exact, "σ = {sigma}, index {}: {lambda} vs {exact}", i + 1);
        }
        for (i, a) in spec.eigenfields.iter().enumerate() {
            assert!(a.is_zero_average());
            for (j, b) in spec.eigenfields.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b) - expect).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn spectrum_size_is_limited_by_resolution() {
    let mesh = Arc::new(generate_mesh(&TwoPhaseConfig::concentric(0.5, 1.0, 2.0).unwrap(), 0.1, 2).unwrap());
    let op = assemble_ntd(&mesh, 2.0).unwrap();
    assert!(ntd_spectrum(&op, op.dim()).is_err());
}

#[test]
fn eigenmode_second_derivatives_respect_the_bound() {
    let st = TorsionState::for_config(&TwoPhaseConfig::concentric(0.5, 1.0, 2.0).unwrap(), 0.05, 2).unwrap();
    let rep = theorem1_experiment(&st, 8, DEFAULT_OVERDETERMINED_TOL).unwrap();
    assert_eq!(rep.rows.len(), 8);
    assert_eq!(rep.k_neg, Some(1));
    for r in &rep.rows {
        assert!(r.d2t < 0.0 && r.d2t <= r.bound + 1e-3 * r.bound.abs(), "{r:?}");
    }
    assert!(rep.to_csv().starts_with("k,lambda,d2T,bound\n"));
}
