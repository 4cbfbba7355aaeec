use nalgebra::{DMatrix, SymmetricEigen};

use super::Potential;
use crate::error::{param, Error, Result};
use crate::numeric::{dot, norm};
use crate::rng::ChainRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeEigs {
    pub min: f64,
    pub max: f64,
    /// Krylov steps taken.
    pub iterations: usize,
}

const MAX_KRYLOV: usize = 1000;
const START_SEED: u64 = 0x6a09_e667_f3bc_c908;

/// Extreme eigenvalues of `∇²W(x)` from Hessian-vector products only.
///
/// Runs a Lanczos (Krylov power) iteration with full reorthogonalization and
/// stops once both extreme Ritz pairs have residual at most `tol · ‖∇²W‖`.
/// In exact arithmetic the subspace is exhausted after at most `d` steps.
pub fn hessian_extreme_eigs<P: Potential + ?Sized>(p: &P, x: &[f64], tol: f64) -> Result<ExtremeEigs> {
    if !(tol > 0.0) {
        return param(format!("eigenvalue tolerance must be positive, got {tol}"));
    }
    let d = p.dim();
    if x.len() != d {
        return param(format!("point has length {} but dimension is {d}", x.len()));
    }
    let cap = d.min(MAX_KRYLOV);
    let mut rng = ChainRng::new(START_SEED);
    let mut q = vec![0.0; d];
    rng.unit_vector(&mut q);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut alpha: Vec<f64> = Vec::with_capacity(cap);
    let mut beta: Vec<f64> = Vec::with_capacity(cap);
    let mut w = vec![0.0; d];

    for k in 0..cap {
        p.hess_vec_into(x, &q, &mut w);
        let a = dot(&q, &w);
        basis.push(q.clone());
        alpha.push(a);
        // Full reorthogonalization, applied twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let b = norm(&w);
        let (vals, vecs) = tridiagonal_eigs(&alpha, &beta);
        let m = vals.len();
        let (imin, imax) = extreme_indices(&vals);
        let scale = vals[imax].abs().max(vals[imin].abs()).max(f64::MIN_POSITIVE);
        let res_min = (b * vecs[(m - 1, imin)]).abs();
        let res_max = (b * vecs[(m - 1, imax)]).abs();
        let exhausted = b <= 1e-14 * scale || k + 1 == d;
        if exhausted || (res_min <= tol * scale && res_max <= tol * scale) {
            return Ok(ExtremeEigs {
                min: vals[imin],
                max: vals[imax],
                iterations: k + 1,
            });
        }
        beta.push(b);
        for (qi, wi) in q.iter_mut().zip(&w) {
            *qi = wi / b;
        }
    }
    Err(Error::Numeric {
        message: format!("extreme eigenvalues of a {d}-dimensional Hessian did not converge"),
        iterations: cap,
        best: None,
    })
}

fn tridiagonal_eigs(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn extreme_indices(vals: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v < vals[imin] {
            imin = i;
        }
        if v > vals[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

/// Dense symmetric Hessian assembled column by column from `hess_vec`.
/// Intended for oracles and checks in small dimension.
pub fn dense_hessian<P: Potential + ?Sized>(p: &P, x: &[f64]) -> DMatrix<f64> {
    let d = p.dim();
    let mut h = DMatrix::zeros(d, d);
    let mut e = vec![0.0; d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        p.hess_vec_into(x, &e, &mut col);
        e[j] = 0.0;
        for i in 0..d {
            h[(i, j)] = col[i];
        }
    }
    (&h + h.transpose()) * 0.5
}
