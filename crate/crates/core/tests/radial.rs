use proptest::prelude::*;
use twophase::radial::{disk_ntd_eigenvalue, AnnulusCandidate, RadialTwoPhase};

/// Classical RK4 for `y′ = f(r, y)` on `[a, b]`.
fn rk4(f: impl Fn(f64, [f64; 2]) -> [f64; 2], mut y: [f64; 2], a: f64, b: f64, n: usize) -> [f64; 2] {
    let h = (b - a) / n as f64;
    let axpy = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    for i in 0..n {
        let r = a + i as f64 * h;
        let k1 = f(r, y);
        let k2 = f(r + h / 2.0, axpy(y, k1, h / 2.0));
        let k3 = f(r + h / 2.0, axpy(y, k2, h / 2.0));
        let k4 = f(r + h, axpy(y, k3, h));
        y = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
    }
    y
}

/// `U″ + (N−1)U′/r = −1/σ` from the axis outwards with `σU′` continuous at
/// `ρ`; returns `U` at each requested radius once `U(R) = 0` is imposed.
fn shoot_two_phase(rho: f64, big_r: f64, sigma: f64, n: u32, radii: &[f64]) -> Vec<f64> {
    let nf = n as f64;
    let ode = |s: f64| move |r: f64, y: [f64; 2]| [y[1], -1.0 / s - (nf - 1.0) * y[1] / r];
    let d = 1e-6;
    let start = [0.0, -d / (nf * sigma)];
    let profile = |r: f64| -> f64 {
        if r <= rho {
            rk4(ode(sigma), start, d, r.max(d), 4000)[0]
        } else {
            let mut y = rk4(ode(sigma), start, d, rho, 4000);
            y[1] *= sigma;
            rk4(ode(1.0), y, rho, r, 4000)[0]
        }
    };
    let shift = profile(big_r);
    radii.iter().map(|&r| profile(r) - shift).collect()
}

#[test]
fn concentric_profile_matches_a_shooting_solve() {
    for (rho, big_r, sigma, n) in [(0.5, 1.0, 2.0, 2), (0.3, 1.5, 0.25, 2), (0.6, 1.0, 5.0, 3)] {
        let cfg = RadialTwoPhase::new(rho, big_r, sigma, n).unwrap();
        let radii = [0.0, 0.1, 0.5 * rho, rho, 0.5 * (rho + big_r), big_r];
        let oracle = shoot_two_phase(rho, big_r, sigma, n, &radii);
        for (r, u) in radii.iter().zip(oracle) {
            assert!((cfg.value(*r).unwrap() - u).abs() < 1e-9, "r = {r}: {} vs {u}", cfg.value(*r).unwrap());
        }
    }
}

#[test]
fn rigidity_matches_quadrature_of_the_profile() {
    let cfg = RadialTwoPhase::planar(0.4, 1.0, 3.0).unwrap();
    // composite Simpson on 2π∫ u r dr
    let m = 2000;
    let h = 1.0 / m as f64;
    let g = |r: f64| cfg.value(r).unwrap() * r;
    let mut s = g(0.0) + g(1.0);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    let integral = std::f64::consts::TAU * s * h / 3.0;
    assert!((cfg.rigidity() - integral).abs() < 1e-10);
}

/// Annulus fluxes from two linear shots with `U(R₁) = 0`.
fn shoot_annulus(r1: f64, r2: f64, n: u32) -> (f64, f64) {
    let nf = n as f64;
    let ode = |r: f64, y: [f64; 2]| [y[1], -1.0 - (nf - 1.0) * y[1] / r];
    let hom = |r: f64, y: [f64; 2]| [y[1], -(nf - 1.0) * y[1] / r];
    let p = rk4(ode, [0.0, 0.0], r1, r2, 20000);
    let q = rk4(hom, [0.0, 1.0], r1, r2, 20000);
    let s = -p[0] / q[0];
    (s.abs(), (p[1] + s * q[1]).abs())
}

#[test]
fn annulus_fluxes_match_a_shooting_solve() {
    for (r1, r2, n) in [(1.0, 2.0, 2), (0.5, 1.0, 2), (1.0, 2.0, 3), (0.2, 3.0, 4)] {
        let f = AnnulusCandidate::new(r1, r2, n).unwrap().fluxes();
        let (inner, outer) = shoot_annulus(r1, r2, n);
        assert!((f.inner - inner).abs() < 1e-10, "{r1} {r2} {n}: {} vs {inner}", f.inner);
        assert!((f.outer - outer).abs() < 1e-10);
        assert!(f.mismatch > 0.0);
    }
    let f = AnnulusCandidate::new(1.0, 2.0, 2).unwrap().fluxes();
    assert!((f.mismatch - 0.123032).abs() < 1e-6);
}

/// `f″ + f′/r − k²f/r² = 0` with a regular start in the core and `σf′`
/// continuous at `ρ`; the NtD value on the mode is `f(1)/f′(1)`.
fn shoot_ntd(k: u32, rho: f64, sigma: f64) -> f64 {
    let kf = k as f64;
    let ode = move |r: f64, y: [f64; 2]| [y[1], -y[1] / r + kf * kf * y[0] / (r * r)];
    let d = 1e-3 * rho;
    let mut y = rk4(ode, [d.powi(k as i32), kf * d.powi(k as i32 - 1)], d, rho, 20000);
    y[1] *= sigma;
    let y = rk4(ode, y, rho, 1.0, 20000);
    y[0] / y[1]
}

#[test]
fn disk_ntd_eigenvalues_match_a_shooting_solve() {
    for k in 1..=6 {
        for (rho, sigma) in [(0.5, 2.0), (0.3, 0.2), (0.8, 10.0)] {
            let oracle = shoot_ntd(k, rho, sigma);
            let v = disk_ntd_eigenvalue(k, rho, sigma);
            assert!((v - oracle).abs() < 1e-9 * oracle.abs(), "k={k} ρ={rho} σ={sigma}: {v} vs {oracle}");
        }
    }
}

proptest! {
    #[test]
    fn profile_is_continuous_and_flux_is_conductivity_free(
        rho in 0.05..0.95f64,
        sigma in 0.05..20.0f64,
        n in 2u32..5,
    ) {
        let cfg = RadialTwoPhase::new(rho, 1.0, sigma, n).unwrap();
        let eps = 1e-9;
        prop_assert!((cfg.value(rho - eps).unwrap() - cfg.value(rho + eps).unwrap()).abs() < 1e-8);
        prop_assert!((sigma * cfg.derivative(rho) - cfg.derivative(rho + eps)).abs() < 1e-8);
        prop_assert_eq!(cfg.flux(), -1.0 / n as f64);
        prop_assert!(cfg.value(1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn one_phase_ntd_is_one_over_k(k in 1u32..30, rho in 0.05..0.95f64) {
        prop_assert!((disk_ntd_eigenvalue(k, rho, 1.0) - 1.0 / k as f64).abs() < 1e-15);
    }
}
