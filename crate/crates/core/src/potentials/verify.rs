use serde::{Deserialize, Serialize};

use super::{find_minimizer, hessian_extreme_eigs, ConvexityProfile, Potential};
use crate::error::{param, Error, Result};
use crate::numeric::{dist, dist_sq, dot, norm};
use crate::rng::ChainRng;

/// Relative slack applied to every inequality check.
pub const SLACK: f64 = 1e-8;

const MAX_RECORDED_VIOLATIONS: usize = 16;
const RADIUS_LEVELS: usize = 32;
const EIG_TOL: f64 = 1e-12;

/// A probe point at which a checked inequality `lhs ≤ rhs` failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeViolation {
    pub inequality: String,
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub check: String,
    pub passed: bool,
    pub n_probes: usize,
    /// Smallest observed `rhs/lhs`-style ratio for the lower-side inequality
    /// (at least 1 when it holds). Meaning depends on the check.
    pub worst_lower_ratio: f64,
    /// Largest observed ratio for the upper-side inequality (at most 1 when it holds).
    pub worst_upper_ratio: f64,
    pub n_violations: usize,
    /// The first few violations, in probe order.
    pub violations: Vec<ProbeViolation>,
}

impl ProfileReport {
    fn new(check: &str, n_probes: usize) -> Self {
        Self {
            check: check.to_string(),
            passed: true,
            n_probes,
            worst_lower_ratio: f64::INFINITY,
            worst_upper_ratio: f64::NEG_INFINITY,
            n_violations: 0,
            violations: Vec::new(),
        }
    }

    /// Records `lhs ≤ rhs` up to the relative slack.
    fn require(&mut self, inequality: &str, point: &[f64], lhs: f64, rhs: f64) {
        let ok = lhs.is_finite() && rhs.is_finite() && lhs <= rhs + SLACK * lhs.abs().max(rhs.abs());
        if !ok {
            self.passed = false;
            self.n_violations += 1;
            if self.violations.len() < MAX_RECORDED_VIOLATIONS {
                self.violations.push(ProbeViolation {
                    inequality: inequality.to_string(),
                    point: point.to_vec(),
                    lhs,
                    rhs,
                });
            }
        }
    }

    fn lower_ratio(&mut self, r: f64) {
        if r.is_finite() {
            self.worst_lower_ratio = self.worst_lower_ratio.min(r);
        }
    }

    fn upper_ratio(&mut self, r: f64) {
        if r.is_finite() {
            self.worst_upper_ratio = self.worst_upper_ratio.max(r);
        }
    }
}

/// Which constants to use for the gradient/potential inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// The four inequalities with their constants exactly as stated.
    AsPrinted,
    /// Factor 2 on the gradient upper bound and 1/2 on the quadratic lower
    /// bound, the constants that integrating the curvature sandwich yields.
    Corrected,
}

/// Probe points: uniform directions on spheres around `center` whose radii
/// are log-spaced over `[radius·1e-3, radius]`. Probe 0 is the center.
pub(crate) fn probe_points(center: &[f64], n: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChainRng::new(seed);
    let levels = RADIUS_LEVELS.min(n.max(2) - 1).max(1);
    let mut dir = vec![0.0; center.len()];
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        out.push(center.to_vec());
    }
    for i in 1..n {
        let level = (i - 1) % levels;
        let frac = if levels == 1 { 1.0 } else { level as f64 / (levels - 1) as f64 };
        let r = radius * 10f64.powf(-3.0 * (1.0 - frac));
        rng.unit_vector(&mut dir);
        out.push(center.iter().zip(&dir).map(|(c, u)| c + r * u).collect());
    }
    out
}

/// Minimizer and the declared offset of `W`, or the offset making `W(x★) + offset = 1`.
pub fn normalization_anchor<P: Potential + ?Sized>(p: &P) -> Result<(Vec<f64>, f64)> {
    let x_star = match p.minimizer_hint() {
        Some(h) => h.to_vec(),
        None => find_minimizer(p, &vec![0.0; p.dim()], 1e-10)?,
    };
    let offset = p.offset().unwrap_or_else(|| 1.0 - p.value(&x_star));
    Ok((x_star, offset))
}

fn kl_constants(profile: &ConvexityProfile) -> Result<(f64, f64, f64, f64)> {
    match *profile {
        ConvexityProfile::WeaklyConvexKl { c1, c2, q, r } => Ok((c1, c2, q, r)),
        other => Err(Error::Capability(format!("profile {other:?} is not a KL profile"))),
    }
}

/// Checks `c1 W^{-r} ≤ λ_min(∇²W)` and `λ_max(∇²W) ≤ c2 W^{-q}` with the
/// normalized potential at probes in the ball of `radius` around `x★`.
pub fn verify_kl_profile<P: Potential + ?Sized>(p: &P, n_probes: usize, radius: f64, seed: u64) -> Result<ProfileReport> {
    let (c1, c2, q, r) = kl_constants(p.profile())?;
    let (x_star, offset) = normalization_anchor(p)?;
    let mut report = ProfileReport::new("kl_profile", n_probes);
    for x in probe_points(&x_star, n_probes, radius, seed) {
        let w = p.value(&x) + offset;
        let eig = hessian_extreme_eigs(p, &x, EIG_TOL)?;
        let lower = c1 * w.powf(-r);
        let upper = c2 * w.powf(-q);
        report.lower_ratio(eig.min * w.powf(r) / c1);
        report.upper_ratio(eig.max * w.powf(q) / c2);
        report.require("c1 W^-r <= lambda_min", &x, lower, eig.min);
        report.require("lambda_max <= c2 W^-q", &x, eig.max, upper);
    }
    Ok(report)
}

/// Checks the gradient/potential sandwich
///
/// ```text
/// c1/(1-r) (W^{1-r} - W★^{1-r}) ≤ |∇W|² ≤ k·c2/(1-q) (W^{1-q} - W★^{1-q})
/// W^{1+r} - W★^{1+r} ≥ h·(1+r) c1 |x - x★|²
/// W^{1+q} - W★^{1+q} ≤ c2 (1+q)/(1-q) |x - x★|²
/// ```
///
/// with `(k, h) = (1, 1)` for [`BoundForm::AsPrinted`] and `(2, 1/2)` for
/// [`BoundForm::Corrected`]. Probe radius is 10.
pub fn verify_grad_bounds<P: Potential + ?Sized>(p: &P, n_probes: usize, seed: u64, form: BoundForm) -> Result<ProfileReport> {
    let (c1, c2, q, r) = kl_constants(p.profile())?;
    let (k, h) = match form {
        BoundForm::AsPrinted => (1.0, 1.0),
        BoundForm::Corrected => (2.0, 0.5),
    };
    let (x_star, offset) = normalization_anchor(p)?;
    let w_star = p.value(&x_star) + offset;
    let name = match form {
        BoundForm::AsPrinted => "grad_bounds",
        BoundForm::Corrected => "grad_bounds_corrected",
    };
    let mut report = ProfileReport::new(name, n_probes);
    let mut g = vec![0.0; p.dim()];
    for x in probe_points(&x_star, n_probes, 10.0, seed) {
        let w = p.value_grad_into(&x, &mut g) + offset;
        let g2 = dot(&g, &g);
        let d2 = dist_sq(&x, &x_star);
        let grad_lo = c1 / (1.0 - r) * (w.powf(1.0 - r) - w_star.powf(1.0 - r));
        let grad_hi = k * c2 / (1.0 - q) * (w.powf(1.0 - q) - w_star.powf(1.0 - q));
        let quad_lo = h * (1.0 + r) * c1 * d2;
        let quad_hi = c2 * (1.0 + q) / (1.0 - q) * d2;
        let pow_r = w.powf(1.0 + r) - w_star.powf(1.0 + r);
        let pow_q = w.powf(1.0 + q) - w_star.powf(1.0 + q);
        if g2 > 0.0 {
            report.lower_ratio(g2 / grad_lo.max(f64::MIN_POSITIVE));
            report.upper_ratio(g2 / grad_hi.max(f64::MIN_POSITIVE));
        }
        report.require("gradient lower bound", &x, grad_lo, g2);
        report.require("gradient upper bound", &x, g2, grad_hi);
        report.require("quadratic lower bound", &x, quad_lo, pow_r);
        report.require("quadratic upper bound", &x, pow_q, quad_hi);
    }
    Ok(report)
}

/// Central-difference check of the gradient with step `1e-5`: passes when
/// `‖g_fd − ∇W‖ ≤ 1e-5 · max(‖∇W‖, 1)` at every probe.
pub fn check_gradient_fd<P: Potential + ?Sized>(p: &P, n_probes: usize, radius: f64, seed: u64) -> Result<ProfileReport> {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-5;
    let d = p.dim();
    let (x_star, _) = normalization_anchor(p)?;
    let mut report = ProfileReport::new("gradient_fd", n_probes);
    let mut g = vec![0.0; d];
    let mut fd = vec![0.0; d];
    for x in probe_points(&x_star, n_probes, radius, seed) {
        p.grad_into(&x, &mut g);
        let mut xp = x.clone();
        for j in 0..d {
            xp[j] = x[j] + H;
            let up = p.value(&xp);
            xp[j] = x[j] - H;
            let dn = p.value(&xp);
            xp[j] = x[j];
            fd[j] = (up - dn) / (2.0 * H);
        }
        let err = dist(&fd, &g);
        let scale = norm(&g).max(1.0);
        report.upper_ratio(err / (TOL * scale));
        report.require("|fd - grad| <= 1e-5 max(|grad|, 1)", &x, err, TOL * scale);
    }
    Ok(report)
}

/// Checks `‖∇W(x) − ∇W(y)‖ ≤ L‖x − y‖` on probe pairs.
pub fn check_lipschitz<P: Potential + ?Sized>(p: &P, n_pairs: usize, radius: f64, seed: u64) -> Result<ProfileReport> {
    let lip = p.smoothness().lipschitz;
    let (x_star, _) = normalization_anchor(p)?;
    let xs = probe_points(&x_star, n_pairs, radius, seed);
    let ys = probe_points(&x_star, n_pairs, radius, seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut report = ProfileReport::new("gradient_lipschitz", n_pairs);
    let d = p.dim();
    let (mut gx, mut gy) = (vec![0.0; d], vec![0.0; d]);
    for (x, y) in xs.iter().zip(&ys) {
        let dxy = dist(x, y);
        if dxy == 0.0 {
            continue;
        }
        p.grad_into(x, &mut gx);
        p.grad_into(y, &mut gy);
        let dg = dist(&gx, &gy);
        report.upper_ratio(dg / (lip * dxy));
        report.require("|grad W(x) - grad W(y)| <= L|x - y|", x, dg, lip * dxy);
    }
    Ok(report)
}

/// Checks the declared convexity profile: `vᵀ∇²W v ≥ ρ|v|²` for strongly
/// convex profiles, the eigenvalue sandwich for KL profiles.
pub fn check_convexity_profile<P: Potential + ?Sized>(p: &P, n_probes: usize, radius: f64, seed: u64) -> Result<ProfileReport> {
    match *p.profile() {
        ConvexityProfile::StronglyConvex { rho } => {
            if !(radius > 0.0) {
                return param("probe radius must be positive");
            }
            let (x_star, _) = normalization_anchor(p)?;
            let mut report = ProfileReport::new("strong_convexity", n_probes);
            let mut rng = ChainRng::new(seed ^ 0xd1b5_4a32_d192_ed03);
            let d = p.dim();
            let mut v = vec![0.0; d];
            let mut hv = vec![0.0; d];
            for x in probe_points(&x_star, n_probes, radius, seed) {
                rng.unit_vector(&mut v);
                p.hess_vec_into(&x, &v, &mut hv);
                let curv = dot(&v, &hv);
                report.lower_ratio(curv / rho);
                report.require("rho |v|^2 <= v'Hv", &x, rho, curv);
            }
            Ok(report)
        }
        ConvexityProfile::WeaklyConvexKl { .. } => verify_kl_profile(p, n_probes, radius, seed),
        ConvexityProfile::Unverified => Err(Error::Capability(format!(
            "{} declares no curvature constants to verify",
            p.describe()
        ))),
    }
}
