use cesaro_lmc::potentials::{builtin_gaussian_location, builtin_p_power};
use cesaro_lmc::sampler::{
    read_trajectory, replicate_runs_with, replicate_seed, run_chain, run_chain_dumped, ChainConfig, Execution,
};
use proptest::prelude::*;

#[test]
fn single_step_average_is_the_start() {
    let w = builtin_gaussian_location(3, &[1.0, 2.0, 3.0], 1.0).unwrap();
    let run = run_chain(&w, &ChainConfig::new(0.1, 1, vec![-1.0, 0.0, 4.0], 9)).unwrap();
    assert_eq!(run.cesaro, vec![-1.0, 0.0, 4.0]);
    assert_eq!(run.steps_done, 1);
}

#[test]
fn replicates_identical_across_thread_counts() {
    let w = builtin_p_power(4, &[0.0; 4], 0.75).unwrap();
    let cfg = ChainConfig::new(0.01, 2000, vec![1.0; 4], 0);
    let seq = replicate_runs_with(&w, &cfg, 24, 55, Execution::Sequential).unwrap();
    for threads in [1, 3, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let par = pool.install(|| replicate_runs_with(&w, &cfg, 24, 55, Execution::Parallel).unwrap());
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
    }
}

#[test]
fn replicate_uses_derived_seed() {
    let w = builtin_gaussian_location(2, &[0.0; 2], 1.0).unwrap();
    let cfg = ChainConfig::new(0.05, 300, vec![0.3, -0.3], 0);
    let reps = replicate_runs_with(&w, &cfg, 5, 123, Execution::Parallel).unwrap();
    for (i, r) in reps.iter().enumerate() {
        let direct = run_chain(&w, &cfg.clone().with_seed(replicate_seed(123, i))).unwrap();
        assert_eq!(r.as_ref().unwrap(), &direct);
    }
}

#[test]
fn dumped_trajectory_reproduces_the_average() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.bin");
    let w = builtin_gaussian_location(2, &[0.5, -0.5], 2.0).unwrap();
    let cfg = ChainConfig::new(0.05, 1000, vec![0.0, 0.0], 17);
    let run = run_chain_dumped(&w, &cfg, 1, &path).unwrap();
    let (header, frames) = read_trajectory(&path).unwrap();
    assert_eq!(header.d, 2);
    assert_eq!(frames.len(), 1000);
    for j in 0..2 {
        let m: f64 = frames.iter().map(|f| f[j]).sum::<f64>() / frames.len() as f64;
        assert!((m - run.cesaro[j]).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn same_seed_same_run(seed in any::<u64>(), x0 in -3.0f64..3.0) {
        let w = builtin_p_power(2, &[0.0; 2], 0.8).unwrap();
        let cfg = ChainConfig::new(0.02, 200, vec![x0, -x0], seed);
        prop_assert_eq!(run_chain(&w, &cfg).unwrap(), run_chain(&w, &cfg).unwrap());
    }

    #[test]
    fn sequential_equals_parallel(base in any::<u64>()) {
        let w = builtin_gaussian_location(3, &[0.0; 3], 1.0).unwrap();
        let cfg = ChainConfig::new(0.1, 100, vec![1.0, 0.0, -1.0], 0);
        let a = replicate_runs_with(&w, &cfg, 6, base, Execution::Sequential).unwrap();
        let b = replicate_runs_with(&w, &cfg, 6, base, Execution::Parallel).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
        }
    }
}
