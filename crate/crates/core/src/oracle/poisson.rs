use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numeric::ScalarSum;
use crate::potentials::{find_minimizer, Potential, PotentialExt};

/// Gauss–Legendre nodes and weights on `[−1, 1]` (Golub–Welsch).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(order, order, |i, k| {
        let m = i.max(k);
        if i.abs_diff(k) == 1 {
            let m = m as f64;
            m / (4.0 * m * m - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Discretization of the 1-D Poisson solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonGrid {
    /// Half-width of the interval in Laplace standard deviations.
    pub k_sigma: f64,
    /// Uniform cells on the interval; doubled on each refinement.
    pub cells: usize,
    pub gl_order: usize,
    /// Fraction of the half-width on which the residual is measured.
    pub interior_fraction: f64,
    pub tolerance: f64,
    pub max_refinements: usize,
}

impl Default for PoissonGrid {
    fn default() -> Self {
        Self {
            k_sigma: 10.0,
            cells: 4000,
            gl_order: 8,
            interior_fraction: 0.6,
            tolerance: 1e-6,
            max_refinements: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSolution1D {
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
    pub pi_f: f64,
    /// `π(g)` by Simpson's rule after centering.
    pub pi_g: f64,
    /// `max |g'' − W'g' − (f − π(f))|` over interior nodes, by 4th-order differences.
    pub residual_sup: f64,
    /// Index range `[lo, hi)` of the interior nodes.
    pub interior: (usize, usize),
    pub cells: usize,
}

/// Solves `g'' − W'g' = f − π(f)` with `π(g) = 0` for a 1-D potential.
///
/// `g'(x) = e^{W(x)} ∫_{−∞}^x e^{−W}(f − π(f))`, evaluated from the left
/// end of the interval left of the mode and as `−∫_x^{∞}` right of it.
/// `f` should be 1-Lipschitz.
pub fn poisson_solve_1d<P, F>(p: &P, f: F, spec: &PoissonGrid) -> Result<PoissonSolution1D>
where
    P: Potential + ?Sized,
    F: Fn(f64) -> f64,
{
    if p.dim() != 1 {
        return Err(Error::Capability(format!("Poisson solver is one-dimensional, got d = {}", p.dim())));
    }
    if spec.cells < 8 || spec.gl_order < 2 || !(spec.k_sigma > 0.0) || !(0.0 < spec.interior_fraction && spec.interior_fraction < 1.0) {
        return param("invalid Poisson grid specification");
    }
    let start = p.minimizer_hint().map_or(0.0, |h| h[0]);
    let mode = find_minimizer(p, &[start], 1e-12)?[0];
    let curv = p.hess_vec(&[mode], &[1.0])[0];
    if !(curv > 0.0) {
        return Err(Error::Numeric {
            message: "zero curvature at the mode".into(),
            iterations: 0,
            best: Some(vec![mode]),
        });
    }
    let sigma = curv.sqrt().recip();
    let mut cells = spec.cells;
    let mut last = None;
    for _ in 0..=spec.max_refinements {
        let sol = solve_on_grid(p, &f, mode, sigma, cells, spec)?;
        if sol.residual_sup <= spec.tolerance {
            return Ok(sol);
        }
        last = Some(sol);
        cells *= 2;
    }
    let sol = last.expect("at least one solve");
    let (lo, hi) = sol.interior;
    let profile = residual_profile(p, &f, &sol)[..].to_vec();
    Err(Error::Numeric {
        message: format!(
            "Poisson residual {:e} above tolerance {:e} on {} cells ({} interior nodes)",
            sol.residual_sup,
            spec.tolerance,
            sol.cells,
            hi - lo
        ),
        iterations: spec.max_refinements + 1,
        best: Some(profile),
    })
}

/// Largest change of `g` on the interior nodes when the interval half-width
/// and the cell count are both doubled (the cell width is unchanged).
pub fn poisson_truncation_bias<P, F>(p: &P, f: F, spec: &PoissonGrid) -> Result<f64>
where
    P: Potential + ?Sized,
    F: Fn(f64) -> f64,
{
    let base = poisson_solve_1d(p, &f, spec)?;
    let wide_spec = PoissonGrid {
        k_sigma: 2.0 * spec.k_sigma,
        cells: 2 * base.cells,
        interior_fraction: spec.interior_fraction / 2.0,
        max_refinements: 0,
        tolerance: f64::INFINITY,
        ..spec.clone()
    };
    let wide = poisson_solve_1d(p, &f, &wide_spec)?;
    // Node i of the base grid is node i + cells/2 of the wide grid.
    let off = base.cells / 2;
    Ok((base.interior.0..base.interior.1)
        .map(|i| (base.g[i] - wide.g[i + off]).abs())
        .fold(0.0, f64::max))
}

fn solve_on_grid<P, F>(p: &P, f: &F, mode: f64, sigma: f64, cells: usize, spec: &PoissonGrid) -> Result<PoissonSolution1D>
where
    P: Potential + ?Sized,
    F: Fn(f64) -> f64,
{
    let a = mode - spec.k_sigma * sigma;
    let b = mode + spec.k_sigma * sigma;
    let h = (b - a) / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|i| a + h * i as f64).collect();
    let w_star = p.value(&[mode]);
    let (gl_x, gl_w) = gauss_legendre(spec.gl_order);

    // Per-cell integrals of φ = e^{−(W − W★)} and φ·f.
    let mut cell_phi = vec![0.0; cells];
    let mut cell_phif = vec![0.0; cells];
    let mut z = ScalarSum::default();
    let mut zf = ScalarSum::default();
    for c in 0..cells {
        let mid = grid[c] + 0.5 * h;
        let (mut s0, mut s1) = (0.0, 0.0);
        for (t, wt) in gl_x.iter().zip(&gl_w) {
            let u = mid + 0.5 * h * t;
            let phi = (w_star - p.value(&[u])).exp();
            s0 += wt * phi;
            s1 += wt * phi * f(u);
        }
        cell_phi[c] = 0.5 * h * s0;
        cell_phif[c] = 0.5 * h * s1;
        z.add(cell_phi[c]);
        zf.add(cell_phif[c]);
    }
    let pi_f = zf.value() / z.value();
    let cell_src: Vec<f64> = cell_phi.iter().zip(&cell_phif).map(|(p0, p1)| p1 - pi_f * p0).collect();

    // Cumulative source integral, anchored at the nearer end.
    let split = (((mode - a) / h).round() as usize).min(cells);
    let mut big_f = vec![0.0; cells + 1];
    let mut acc = ScalarSum::default();
    for i in 1..=split {
        acc.add(cell_src[i - 1]);
        big_f[i] = acc.value();
    }
    let mut acc = ScalarSum::default();
    for i in (split..cells).rev() {
        acc.add(cell_src[i]);
        big_f[i] = -acc.value();
    }

    let mut g_prime = vec![0.0; cells + 1];
    let mut g2 = vec![0.0; cells + 1];
    for (i, &x) in grid.iter().enumerate() {
        let mut dw = [0.0];
        let w = p.value_grad_into(&[x], &mut dw);
        g_prime[i] = (w - w_star).exp() * big_f[i];
        g2[i] = dw[0] * g_prime[i] + f(x) - pi_f;
    }

    // Trapezoid with the Euler–Maclaurin end correction on each cell.
    let mut g = vec![0.0; cells + 1];
    let mut acc = ScalarSum::default();
    for i in 1..=cells {
        acc.add(0.5 * h * (g_prime[i - 1] + g_prime[i]) - h * h / 12.0 * (g2[i] - g2[i - 1]));
        g[i] = acc.value();
    }

    let phi_nodes: Vec<f64> = grid.iter().map(|&x| (w_star - p.value(&[x])).exp()).collect();
    let simpson = |vals: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = ScalarSum::default();
        for i in 0..=cells {
            let c = if i == 0 || i == cells {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s.add(c * vals(i));
        }
        s.value() * h / 3.0
    };
    let trap = |vals: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = ScalarSum::default();
        for i in 0..=cells {
            s.add(if i == 0 || i == cells { 0.5 } else { 1.0 } * vals(i));
        }
        s.value() * h
    };
    let z_nodes = trap(&|i| phi_nodes[i]);
    let shift = trap(&|i| phi_nodes[i] * g[i]) / z_nodes;
    g.iter_mut().for_each(|v| *v -= shift);
    let z_simpson = simpson(&|i| phi_nodes[i]);
    let pi_g = simpson(&|i| phi_nodes[i] * g[i]) / z_simpson;

    let margin = ((1.0 - spec.interior_fraction) * cells as f64 / 2.0).ceil() as usize;
    let interior = (margin.max(2), (cells + 1 - margin).min(cells - 1));
    let mut sol = PoissonSolution1D {
        grid,
        g,
        g_prime,
        pi_f,
        pi_g,
        residual_sup: 0.0,
        interior,
        cells,
    };
    sol.residual_sup = residual_profile(p, f, &sol).into_iter().fold(0.0, f64::max);
    Ok(sol)
}

fn residual_profile<P, F>(p: &P, f: &F, sol: &PoissonSolution1D) -> Vec<f64>
where
    P: Potential + ?Sized,
    F: Fn(f64) -> f64,
{
    let h = sol.grid[1] - sol.grid[0];
    let g = &sol.g;
    (sol.interior.0..sol.interior.1)
        .map(|i| {
            let d2 = (-g[i + 2] + 16.0 * g[i + 1] - 30.0 * g[i] + 16.0 * g[i - 1] - g[i - 2]) / (12.0 * h * h);
            let d1 = (-g[i + 2] + 8.0 * g[i + 1] - 8.0 * g[i - 1] + g[i - 2]) / (12.0 * h);
            let x = sol.grid[i];
            let dw = p.grad(&[x])[0];
            (d2 - dw * d1 - (f(x) - sol.pi_f)).abs()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{builtin_gaussian_location, builtin_p_power};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            assert!((q - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn gaussian_identity_gives_minus_x() {
        let g = builtin_gaussian_location(1, &[0.0], 1.0).unwrap();
        let sol = poisson_solve_1d(&g, |x| x, &PoissonGrid::default()).unwrap();
        assert!(sol.residual_sup < 1e-6);
        assert!(sol.pi_g.abs() < 1e-8);
        assert!(sol.pi_f.abs() < 1e-12);
        for i in sol.interior.0..sol.interior.1 {
            assert!((sol.g[i] + sol.grid[i]).abs() < 1e-8, "x = {}", sol.grid[i]);
            assert!((sol.g_prime[i] + 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_source_gives_zero() {
        let g = builtin_gaussian_location(1, &[0.5], 2.0).unwrap();
        let sol = poisson_solve_1d(&g, |_| 3.0, &PoissonGrid::default()).unwrap();
        assert!(sol.g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn p_power_residual_small() {
        let w = builtin_p_power(1, &[0.0], 0.75).unwrap();
        let sol = poisson_solve_1d(&w, |x| x, &PoissonGrid::default()).unwrap();
        assert!(sol.residual_sup < 1e-6, "{}", sol.residual_sup);
        assert!(sol.pi_g.abs() < 1e-8);
    }

    #[test]
    fn truncation_bias_shrinks_with_coverage() {
        let w = builtin_p_power(1, &[0.0], 0.75).unwrap();
        let base = PoissonGrid::default();
        let b10 = poisson_truncation_bias(&w, |x| x, &base).unwrap();
        let wider = PoissonGrid { k_sigma: 12.0, cells: 4800, ..base };
        let b12 = poisson_truncation_bias(&w, |x| x, &wider).unwrap();
        assert!(b12 < b10, "{b12} vs {b10}");
        assert!(b10 < 1e-4, "{b10}");
    }

    #[test]
    fn rejects_multivariate() {
        let g = builtin_gaussian_location(2, &[0.0; 2], 1.0).unwrap();
        assert!(matches!(poisson_solve_1d(&g, |x| x, &PoissonGrid::default()), Err(Error::Capability(_))));
    }
}
