use std::sync::Arc;

use twophase::fem::{
    boundary_flux, gradient_energy, interface_flux_jump, normal_second_derivative, solve_dirichlet, solve_neumann_zero_avg,
    solve_torsion, torsional_rigidity,
};
use twophase::geometry::norm;
use twophase::mesh::Region;
use twophase::radial::RadialTwoPhase;
use twophase::{generate_mesh, BoundaryField, Error, Mesh, StarBoundary, TwoPhaseConfig};

fn concentric(rho: f64, sigma: f64, h: f64) -> Arc<Mesh> {
    Arc::new(generate_mesh(&TwoPhaseConfig::concentric(rho, 1.0, sigma).unwrap(), h, 2).unwrap())
}

fn nodal_error(u: &twophase::FemField, exact: impl Fn([f64; 2]) -> f64) -> f64 {
    u.mesh().nodes().iter().zip(u.values()).map(|(&p, &v)| (v - exact(p)).abs()).fold(0.0, f64::max)
}

#[test]
fn torsion_matches_the_radial_profile() {
    for sigma in [0.5, 2.0, 10.0] {
        let mesh = concentric(0.5, sigma, 0.05);
        let u = solve_torsion(&mesh, sigma).unwrap();
        let exact = RadialTwoPhase::planar(0.5, 1.0, sigma).unwrap();
        let err = nodal_error(&u, |p| exact.value(norm(p).min(1.0)).unwrap());
        assert!(err < 1e-5, "σ = {sigma}: nodal error {err:e}");
        let r = torsional_rigidity(&u, sigma);
        assert!((r.value() - exact.rigidity()).abs() < 1e-6, "σ = {sigma}: {} vs {}", r.value(), exact.rigidity());
        assert!(r.relative_gap() < 1e-10);
        let flux = boundary_flux(&u, sigma, true).unwrap();
        assert!((flux.mean() + 0.5).abs() < 1e-6 && flux.max_deviation() < 1e-3);
    }
}

#[test]
fn torsion_error_falls_under_refinement() {
    let exact = RadialTwoPhase::planar(0.4, 1.0, 3.0).unwrap();
    let errs: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| {
            let mesh = concentric(0.4, 3.0, h);
            nodal_error(&solve_torsion(&mesh, 3.0).unwrap(), |p| exact.value(norm(p).min(1.0)).unwrap())
        })
        .collect();
    // meshes are not nested, so only ask for a clear drop
    assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
}

#[test]
fn energy_splits_over_regions() {
    let mesh = concentric(0.5, 2.0, 0.05);
    let u = solve_torsion(&mesh, 2.0).unwrap();
    let total = gradient_energy(&u, None);
    let parts = gradient_energy(&u, Some(Region::Core(0))) + gradient_energy(&u, Some(Region::Shell));
    assert!((total - parts).abs() < 1e-12 * total);
    // ∫_core |∇u|² = 2π∫₀^ρ (r/(2σ))² r dr
    let core = std::f64::consts::PI * 0.5f64.powi(4) / (8.0 * 4.0);
    assert!((gradient_energy(&u, Some(Region::Core(0))) - core).abs() < 1e-6 * core);
}

#[test]
fn harmonic_dirichlet_data_is_reproduced() {
    let mesh = concentric(0.5, 1.0, 0.05);
    let g = BoundaryField::from_fn(mesh.boundary().clone(), |_, p| p[0] * p[0] - p[1] * p[1] + 0.3 * p[0]);
    let u = solve_dirichlet(&mesh, 1.0, &g).unwrap();
    let err = nodal_error(&u, |p| p[0] * p[0] - p[1] * p[1] + 0.3 * p[0]);
    // curved elements reproduce quadratics only up to the boundary fit
    assert!(err < 2e-5, "{err:e}");
}

#[test]
fn neumann_mode_on_the_unit_disk() {
    // one phase: v = r^k cos kθ / k has ∂_n v = cos kθ and zero boundary mean
    let mesh = concentric(0.5, 1.0, 0.05);
    for k in 1..=4 {
        let kf = k as f64;
        let xi = BoundaryField::from_fn(mesh.boundary().clone(), |th, _| (kf * th).cos());
        let v = solve_neumann_zero_avg(&mesh, 1.0, &xi).unwrap();
        let err = nodal_error(&v, |p| norm(p).powi(k) * (kf * p[1].atan2(p[0])).cos() / kf);
        assert!(err < 1e-4, "k = {k}: {err:e}");
        assert!(v.boundary_trace().mean().abs() < 1e-12);
    }
    let bad = BoundaryField::constant(mesh.boundary().clone(), 1.0);
    assert!(matches!(solve_neumann_zero_avg(&mesh, 1.0, &bad), Err(Error::Compatibility { .. })));
}

#[test]
fn second_normal_derivative_on_the_disk() {
    let mesh = concentric(0.5, 2.0, 0.05);
    let u = solve_torsion(&mesh, 2.0).unwrap();
    let d2 = normal_second_derivative(&u, 2.0).unwrap();
    assert!(d2.values().iter().all(|v| (v + 0.5).abs() < 2e-3), "{:?}", d2.norm_inf());
}

#[test]
fn interface_flux_jump_shrinks_with_h() {
    let jumps: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| interface_flux_jump(&solve_torsion(&concentric(0.5, 2.0, h), 2.0).unwrap(), 2.0).unwrap())
        .collect();
    assert!(jumps[1] < 1e-3 && jumps[1] < jumps[0], "{jumps:?}");
}

#[test]
fn off_center_core_breaks_flux_constancy() {
    let cfg = TwoPhaseConfig::new(
        StarBoundary::circle([0.0, 0.0], 1.0).unwrap(),
        vec![StarBoundary::circle([0.2, 0.0], 0.4).unwrap()],
        3.0,
    )
    .unwrap();
    let mesh = Arc::new(generate_mesh(&cfg, 0.05, 2).unwrap());
    let u = solve_torsion(&mesh, 3.0).unwrap();
    let flux = boundary_flux(&u, 3.0, true).unwrap();
    // divergence theorem: the mean flux is −|Ω|/|∂Ω| whatever the core
    assert!((flux.mean() + 0.5).abs() < 1e-6);
    assert!(flux.max_deviation() > 1e-2);
}
