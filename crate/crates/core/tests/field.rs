use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use twophase::shape::project_zero_average;
use twophase::{generate_mesh, BoundaryField, Mesh, TwoPhaseConfig};

fn mesh() -> &'static Arc<Mesh> {
    static MESH: OnceLock<Arc<Mesh>> = OnceLock::new();
    MESH.get_or_init(|| Arc::new(generate_mesh(&TwoPhaseConfig::concentric(0.5, 1.0, 2.0).unwrap(), 0.1, 2).unwrap()))
}

fn trig(coeffs: &[f64]) -> BoundaryField {
    let c = coeffs.to_vec();
    BoundaryField::from_fn(mesh().boundary().clone(), move |th, _| {
        c.iter().enumerate().map(|(k, a)| a * (k as f64 * th + 0.3 * k as f64).cos()).sum()
    })
}

#[test]
fn boundary_length_and_constant_integral() {
    let b = mesh().boundary();
    assert!((b.length() - std::f64::consts::TAU).abs() < 1e-6);
    let one = BoundaryField::constant(b.clone(), 2.0);
    assert!((one.integral() - 2.0 * b.length()).abs() < 1e-12);
    assert!((one.mean() - 2.0).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_removes_the_mean(c in prop::collection::vec(-2.0..2.0f64, 1..6)) {
        let f = project_zero_average(&trig(&c));
        prop_assert!(f.is_zero_average());
        prop_assert!(f.mean().abs() < 1e-12 * (1.0 + f.norm_inf()));
        let again = project_zero_average(&f);
        for (a, b) in again.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_product_is_symmetric_and_positive(
        a in prop::collection::vec(-2.0..2.0f64, 1..5),
        b in prop::collection::vec(-2.0..2.0f64, 1..5),
    ) {
        let (fa, fb) = (trig(&a), trig(&b));
        prop_assert!((fa.inner(&fb) - fb.inner(&fa)).abs() < 1e-12);
        prop_assert!(fa.inner(&fa) >= 0.0);
        prop_assert!((fa.l2_norm().powi(2) - fa.inner(&fa)).abs() < 1e-10);
        prop_assert!(fa.inner(&fb).abs() <= fa.l2_norm() * fb.l2_norm() + 1e-12);
    }
}
