use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use proptest::prelude::*;
use twophase::geometry::{deform_boundary_fn, dist, reflect_point, DeformOptions, HalfplaneSweepFrame};
use twophase::mesh::{Region, MAX_EDGE_FACTOR, MIN_ANGLE_DEG};
use twophase::{generate_mesh, StarBoundary, TwoPhaseConfig};

#[test]
fn area_of_a_single_mode_perturbation() {
    // r = 1 + ε cos kθ encloses ½∫r² = π(1 + ε²/2)
    for (k, eps) in [(2, 0.1), (3, 0.2), (5, 0.05)] {
        let mut cos = vec![0.0; k];
        cos[k - 1] = eps;
        let b = StarBoundary::new([0.3, -0.2], 1.0, cos, vec![]).unwrap();
        assert!((b.area() - PI * (1.0 + eps * eps / 2.0)).abs() < 1e-12);
    }
    let c = StarBoundary::circle([0.0, 0.0], 0.7).unwrap();
    assert!((c.perimeter() - TAU * 0.7).abs() < 1e-10);
    assert!((c.curvature(1.0) - 1.0 / 0.7).abs() < 1e-12);
}

#[test]
fn renormalized_deformation_keeps_the_area() {
    let b = StarBoundary::new([0.0, 0.0], 1.0, vec![0.0, 0.05], vec![0.02]).unwrap();
    let d = deform_boundary_fn(&b, |th| (3.0 * th).cos() + 0.5, 0.05, DeformOptions::renormalized()).unwrap();
    assert!((d.area() - b.area()).abs() < 1e-10 * b.area());
    let free = deform_boundary_fn(&b, |_| 1.0, 0.05, DeformOptions::default()).unwrap();
    // a uniform normal push grows the area by about t·perimeter
    assert!((free.area() - b.area() - 0.05 * b.perimeter()).abs() < 0.05 * 0.05 * 10.0);
}

#[test]
fn overlapping_cores_are_rejected() {
    let outer = StarBoundary::circle([0.0, 0.0], 1.0).unwrap();
    let a = StarBoundary::circle([-0.1, 0.0], 0.3).unwrap();
    let b = StarBoundary::circle([0.1, 0.0], 0.3).unwrap();
    assert!(TwoPhaseConfig::new(outer.clone(), vec![a, b], 2.0).is_err());
    let big = StarBoundary::circle([0.0, 0.0], 1.2).unwrap();
    assert!(TwoPhaseConfig::new(outer, vec![big], 2.0).is_err());
}

#[test]
fn mesh_quality_and_topology() {
    let cfg = TwoPhaseConfig::concentric(0.5, 1.0, 2.0).unwrap();
    let mut errors = Vec::new();
    for h in [0.1, 0.05] {
        let m = generate_mesh(&cfg, h, 2).unwrap();
        assert!(m.min_angle_deg() >= MIN_ANGLE_DEG, "min angle {}", m.min_angle_deg());
        assert!(m.max_edge_length() <= MAX_EDGE_FACTOR * h);
        assert_eq!(m.euler_characteristic(), 1);
        errors.push(((m.area() - PI).abs(), (m.core_area() - PI / 4.0).abs()));
    }
    // quadratic boundary interpolation: area error O(h⁴)
    assert!(errors[0].0 < 1e-5 && errors[0].1 < 1e-5, "{errors:?}");
    assert!(errors[1].0 < errors[0].0 / 8.0 && errors[1].1 < errors[0].1 / 8.0, "{errors:?}");
}

#[test]
fn element_regions_follow_the_core() {
    let cfg = TwoPhaseConfig::new(
        StarBoundary::new([0.0, 0.0], 1.0, vec![0.0, 0.1], vec![]).unwrap(),
        vec![StarBoundary::circle([0.2, 0.1], 0.3).unwrap()],
        3.0,
    )
    .unwrap();
    let m = generate_mesh(&cfg, 0.08, 2).unwrap();
    for e in 0..m.n_elements() {
        let c = m.element_coords(e);
        let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
        assert_eq!(m.region(e).is_core(), cfg.cores()[0].contains(centroid), "element {e}");
    }
    assert!(m.regions().contains(&Region::Shell));
}

#[test]
fn curved_area_converges_faster_than_the_polygon() {
    let cfg = TwoPhaseConfig::concentric(0.4, 1.0, 2.0).unwrap();
    let m = generate_mesh(&cfg, 0.1, 2).unwrap();
    let curved = (m.area() - PI).abs();
    let polygon = (m.polygon_area(false) - PI).abs();
    assert!(curved < 1e-2 * polygon, "curved {curved:.2e}, polygon {polygon:.2e}");
    let fine = Arc::new(m.refine_uniform().unwrap());
    assert!(fine.n_elements() == 4 * m.n_elements());
}

fn star() -> impl Strategy<Value = StarBoundary> {
    (
        -0.5..0.5f64,
        -0.5..0.5f64,
        0.5..2.0f64,
        prop::collection::vec(-0.04..0.04f64, 0..4),
        prop::collection::vec(-0.04..0.04f64, 0..4),
    )
        .prop_map(|(x, y, r0, c, s)| StarBoundary::new([x, y], r0, c.iter().map(|v| v * r0).collect(), s.iter().map(|v| v * r0).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn points_sit_at_their_radius(b in star(), th in 0.0..TAU) {
        let p = b.point(th);
        prop_assert!((dist(p, b.center()) - b.radius(th)).abs() < 1e-12);
        prop_assert!((b.angle_of(p) - th).rem_euclid(TAU).min((th - b.angle_of(p)).rem_euclid(TAU)) < 1e-9);
        prop_assert!(b.signed_distance(p).abs() < 1e-7);
        let c = b.center();
        let inside = [c[0] + 0.9 * (p[0] - c[0]), c[1] + 0.9 * (p[1] - c[1])];
        let outside = [c[0] + 1.1 * (p[0] - c[0]), c[1] + 1.1 * (p[1] - c[1])];
        prop_assert!(b.contains(inside) && !b.contains(outside));
    }

    #[test]
    fn rigid_motions_keep_area_and_perimeter(b in star(), phi in -PI..PI, vx in -1.0..1.0f64, vy in -1.0..1.0f64) {
        let m = b.rotated(phi, [0.1, 0.2]).translated([vx, vy]);
        prop_assert!((m.area() - b.area()).abs() < 1e-10 * b.area());
        prop_assert!((m.perimeter() - b.perimeter()).abs() < 1e-8 * b.perimeter());
    }

    #[test]
    fn text_round_trip(b in star()) {
        let back = StarBoundary::from_text(&b.to_text()).unwrap();
        prop_assert_eq!(back, b);
    }

    #[test]
    fn reflection_is_an_involution(phi in -PI..PI, lambda in -2.0..2.0f64, x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let f = HalfplaneSweepFrame::from_angle(phi, lambda);
        let p = [x, y];
        let q = reflect_point(p, &f);
        prop_assert!(dist(reflect_point(q, &f), p) < 1e-12);
        prop_assert!((f.height(q) + f.height(p) - 2.0 * lambda).abs() < 1e-12);
    }
}
