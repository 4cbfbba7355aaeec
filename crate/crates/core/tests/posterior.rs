use cesaro_lmc::bayes::{build_posterior, sample_dataset, Dataset, GaussianLocationModel, LogisticModel, PriorSpec};
use cesaro_lmc::potentials::{check_gradient_fd, Potential, PotentialExt};
use proptest::prelude::*;

fn logistic_posterior(n: usize) -> cesaro_lmc::bayes::PosteriorPotential<LogisticModel> {
    let design: Vec<Vec<f64>> = (0..7).map(|i| vec![(i as f64).sin(), (0.3 * i as f64).cos(), 0.5]).collect();
    let model = LogisticModel::new(3, 0.1, design).unwrap();
    let data = sample_dataset(&model, &[0.4, -0.2, 0.1], n, 8).unwrap();
    build_posterior(model, data, PriorSpec::gaussian(1.0)).unwrap()
}

#[test]
fn gradient_is_bit_stable_across_thread_counts() {
    let post = logistic_posterior(5000);
    let theta = [0.3, 0.1, -0.4];
    let reference = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| post.grad(&theta));
    for threads in [2, 5, 16] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let g = pool.install(|| post.grad(&theta));
        assert_eq!(g, reference);
        let v = pool.install(|| post.value(&theta));
        assert_eq!(v.to_bits(), post.value(&theta).to_bits());
    }
}

#[test]
fn posterior_gradient_matches_finite_differences() {
    let post = logistic_posterior(300);
    let report = check_gradient_fd(&post, 50, 2.0, 4).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn gaussian_posterior_minimizer_is_conjugate_mean() {
    let model = GaussianLocationModel::new(2, 1.0).unwrap();
    let data = sample_dataset(&model, &[1.0, -1.0], 100, 3).unwrap();
    let xbar = data.mean_row();
    let post = build_posterior(model, data, PriorSpec::gaussian(1.0)).unwrap();
    let m: Vec<f64> = xbar.iter().map(|x| 100.0 * x / 101.0).collect();
    assert!(post.grad(&m).iter().all(|g| g.abs() < 1e-10));
}

#[test]
fn dataset_round_trip_rebuilds_the_same_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let model = GaussianLocationModel::new(2, 1.0).unwrap();
    let data = sample_dataset(&model, &[0.0, 0.5], 40, 12).unwrap();
    data.export(&path).unwrap();
    let back = Dataset::import(&path).unwrap();
    assert_eq!(back, data);
    let a = build_posterior(model.clone(), data, PriorSpec::default()).unwrap();
    let b = build_posterior(model, back, PriorSpec::default()).unwrap();
    assert_eq!(a.grad(&[0.2, 0.2]), b.grad(&[0.2, 0.2]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hessian_vector_product_is_symmetric(
        theta in prop::array::uniform3(-2.0f64..2.0),
        u in prop::array::uniform3(-1.0f64..1.0),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let post = logistic_posterior(200);
        let hu = post.hess_vec(&theta, &u);
        let hv = post.hess_vec(&theta, &v);
        let a: f64 = hu.iter().zip(&v).map(|(x, y)| x * y).sum();
        let b: f64 = hv.iter().zip(&u).map(|(x, y)| x * y).sum();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn posterior_is_convex_along_lines(
        a in prop::array::uniform3(-2.0f64..2.0),
        b in prop::array::uniform3(-2.0f64..2.0),
        t in 0.0f64..1.0,
    ) {
        let post = logistic_posterior(100);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - t) * x + t * y).collect();
        let lhs = post.value(&mid);
        let rhs = (1.0 - t) * post.value(&a) + t * post.value(&b);
        prop_assert!(lhs <= rhs + 1e-9 * rhs.abs().max(1.0));
    }
}
