use cesaro_lmc::potentials::{
    builtin_gaussian_location, builtin_logistic, builtin_p_power, check_convexity_profile, check_gradient_fd,
    check_lipschitz, dense_hessian, hessian_extreme_eigs, verify_grad_bounds, verify_kl_profile, BoundForm,
    ConvexityProfile, Potential, PotentialExt, Reprofiled,
};
use proptest::prelude::*;

#[test]
fn p_power_battery_passes() {
    for &p in &[0.6, 0.75, 0.9, 1.0] {
        let w = builtin_p_power(3, &[0.5, -0.5, 0.0], p).unwrap();
        assert!(check_gradient_fd(&w, 200, 5.0, 1).unwrap().passed);
        assert!(check_lipschitz(&w, 200, 5.0, 2).unwrap().passed);
        assert!(check_convexity_profile(&w, 500, 20.0, 3).unwrap().passed);
        assert!(verify_grad_bounds(&w, 500, 4, BoundForm::Corrected).unwrap().passed);
    }
}

#[test]
fn inflated_curvature_constant_is_caught_with_a_probe() {
    let w = builtin_p_power(2, &[0.0; 2], 0.75).unwrap();
    let ConvexityProfile::WeaklyConvexKl { c1, c2, q, r } = *w.profile() else { unreachable!() };
    let bad = Reprofiled::new(w, ConvexityProfile::WeaklyConvexKl { c1: 4.0 * c1, c2, q, r });
    let report = verify_kl_profile(&bad, 500, 10.0, 5).unwrap();
    assert!(!report.passed);
    let v = &report.violations[0];
    assert_eq!(v.point.len(), 2);
    assert!(v.lhs > v.rhs);
}

#[test]
fn logistic_extreme_eigenvalues_match_dense_solver() {
    let feats: Vec<Vec<f64>> = (0..30).map(|i| (0..6).map(|j| ((i * 7 + j * 3) as f64).sin()).collect()).collect();
    let labels: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let w = builtin_logistic(&feats, &labels, 0.05).unwrap();
    let x = vec![0.2; 6];
    let eig = hessian_extreme_eigs(&w, &x, 1e-10).unwrap();
    let dense = dense_hessian(&w, &x).symmetric_eigenvalues();
    let (lo, hi) = (dense.min(), dense.max());
    assert!((eig.min - lo).abs() <= 1e-8 * hi);
    assert!((eig.max - hi).abs() <= 1e-8 * hi);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_gradient_is_affine(x in prop::array::uniform4(-10.0f64..10.0), prec in 0.1f64..5.0) {
        let w = builtin_gaussian_location(4, &[1.0, 0.0, -1.0, 2.0], prec).unwrap();
        let g = w.grad(&x);
        for (j, m) in [1.0, 0.0, -1.0, 2.0].iter().enumerate() {
            prop_assert!((g[j] - prec * (x[j] - m)).abs() <= 1e-12 * (1.0 + g[j].abs()));
        }
    }

    #[test]
    fn p_power_hessian_is_positive(x in prop::array::uniform3(-50.0f64..50.0), p in 0.55f64..1.0) {
        let w = builtin_p_power(3, &[0.0; 3], p).unwrap();
        let eig = hessian_extreme_eigs(&w, &x, 1e-10).unwrap();
        prop_assert!(eig.min > 0.0);
        prop_assert!(eig.max <= w.smoothness().lipschitz * (1.0 + 1e-9));
    }
}
