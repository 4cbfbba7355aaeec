use super::Potential;
use crate::error::{param, Error, Result};
use crate::numeric::norm;

const MAX_ITER: usize = 1_000_000;

/// Gradient descent with step `1/L` from `x0` until `‖∇W‖ ≤ tol_grad`.
pub fn find_minimizer<P: Potential + ?Sized>(p: &P, x0: &[f64], tol_grad: f64) -> Result<Vec<f64>> {
    if !(tol_grad > 0.0) {
        return param(format!("gradient tolerance must be positive, got {tol_grad}"));
    }
    if x0.len() != p.dim() {
        return param(format!("start point has length {} but dimension is {}", x0.len(), p.dim()));
    }
    let step = 1.0 / p.smoothness().lipschitz;
    let mut x = x0.to_vec();
    let mut g = vec![0.0; x.len()];
    let mut best = x.clone();
    let mut best_norm = f64::INFINITY;
    for it in 0..MAX_ITER {
        p.grad_into(&x, &mut g);
        let gn = norm(&g);
        if !gn.is_finite() {
            break;
        }
        if gn < best_norm {
            best_norm = gn;
            best.copy_from_slice(&x);
        }
        if gn <= tol_grad {
            return Ok(x);
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        if it + 1 == MAX_ITER {
            break;
        }
    }
    Err(Error::Numeric {
        message: format!("gradient descent stalled with best gradient norm {best_norm:e} (target {tol_grad:e})"),
        iterations: MAX_ITER,
        best: Some(best),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{builtin_gaussian_location, builtin_logistic, builtin_p_power, PotentialExt};
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_minimizers() {
        let g = builtin_gaussian_location(2, &[5.0, -3.0], 2.0).unwrap();
        let m = find_minimizer(&g, &[100.0, 100.0], 1e-10).unwrap();
        assert_abs_diff_eq!(m[0], 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m[1], -3.0, epsilon = 1e-9);
        let w = builtin_p_power(3, &[1.0, 2.0, 3.0], 0.75).unwrap();
        let m = find_minimizer(&w, &[0.0; 3], 1e-10).unwrap();
        assert!(norm(&w.grad(&m)) <= 1e-10);
        for (mi, ci) in m.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*mi, ci, epsilon = 1e-9);
        }
    }

    #[test]
    fn logistic_single_observation_matches_bisection() {
        // ∇W(θ) = θ − σ(−θ), increasing in θ.
        let w = builtin_logistic(&[vec![1.0]], &[1.0], 1.0).unwrap();
        let m = find_minimizer(&w, &[0.0], 1e-12).unwrap();
        let f = |t: f64| t - 1.0 / (1.0 + t.exp());
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert_abs_diff_eq!(m[0], 0.5 * (lo + hi), epsilon = 1e-10);
    }
}
