//! Closed-form step size and iteration count prescriptions.
//!
//! Every rule evaluates its formula verbatim, divides the step by `calib`
//! and multiplies the iteration count by it, then clamps the step at the
//! regime ceiling `γ₀`. A clamped step keeps the horizon `t_N = Nγ` by
//! enlarging `N`. The real-valued `N` is ceiled last.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bayes::epsilon_n;
use crate::error::{param, Error, Result};
use crate::potentials::{find_minimizer, ConvexityProfile, LaplacianGradBound, Potential, SmoothnessInfo};

pub const DEFAULT_FRAK_E: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "Weak-i.a")]
    WeakIa,
    #[serde(rename = "Weak-i.b")]
    WeakIb,
    #[serde(rename = "Weak-ii.a")]
    WeakIIa,
    #[serde(rename = "Weak-ii.b")]
    WeakIIb,
    #[serde(rename = "SC-i")]
    ScI,
    #[serde(rename = "SC-ii")]
    ScII,
    #[serde(rename = "Bayes-Weak-i")]
    BayesWeakI,
    #[serde(rename = "Bayes-Weak-ii")]
    BayesWeakII,
    #[serde(rename = "Bayes-Weak-iii")]
    BayesWeakIII,
    #[serde(rename = "Bayes-SC-i.a")]
    BayesScIa,
    #[serde(rename = "Bayes-SC-i.b")]
    BayesScIb,
    /// Step and iteration count given directly.
    #[serde(rename = "fixed")]
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpsilonMode {
    FormulaBound,
    UserSupplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsilonEstimate {
    pub value: f64,
    pub mode: UpsilonMode,
}

impl UpsilonEstimate {
    pub fn user(value: f64) -> Result<Self> {
        if !(value >= 1.0 && value.is_finite()) {
            return param(format!("Upsilon must be at least 1, got {value}"));
        }
        Ok(Self {
            value,
            mode: UpsilonMode::UserSupplied,
        })
    }
}

/// `Υ = max(1, c_r (c2 ∨ L)^{1/(1+q−r)} c1^{−1/(1−r)} log(1 + dL) d^{1/(1+q−r)})`.
pub fn compute_upsilon(profile: &ConvexityProfile, lipschitz: f64, d: usize, c_r: f64) -> Result<UpsilonEstimate> {
    let ConvexityProfile::WeaklyConvexKl { c1, c2, q, r } = *profile else {
        return Err(Error::Capability(format!("Upsilon needs a KL profile, got {profile:?}")));
    };
    if r >= 1.0 {
        return param(format!("Upsilon is undefined for r = {r} >= 1"));
    }
    if !(c_r > 0.0) || !(lipschitz > 0.0) || d == 0 {
        return param("Upsilon needs c_r > 0, L > 0 and d >= 1");
    }
    let df = d as f64;
    let e = 1.0 / (1.0 + q - r);
    let v = c_r * c2.max(lipschitz).powf(e) * c1.powf(-1.0 / (1.0 - r)) * (1.0 + df * lipschitz).ln() * df.powf(e);
    Ok(UpsilonEstimate {
        value: v.max(1.0),
        mode: UpsilonMode::FormulaBound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningInputs {
    pub profile: ConvexityProfile,
    pub lipschitz: f64,
    pub hessian_lipschitz: Option<f64>,
    pub laplacian_grad: Option<LaplacianGradBound>,
    pub d: usize,
    pub d_prime: usize,
    pub eps: f64,
    pub frak_e: f64,
    pub x0_dist: f64,
    pub calib: f64,
    /// Constant `c_r` of the Υ bound.
    pub c_r: f64,
    /// Replaces the formula bound for Υ.
    pub upsilon: Option<f64>,
}

impl TuningInputs {
    pub fn new(profile: ConvexityProfile, smoothness: &SmoothnessInfo, d: usize, eps: f64) -> Self {
        Self {
            profile,
            lipschitz: smoothness.lipschitz,
            hessian_lipschitz: smoothness.hessian_lipschitz,
            laplacian_grad: smoothness.laplacian_grad,
            d,
            d_prime: d,
            eps,
            frak_e: DEFAULT_FRAK_E,
            x0_dist: 0.0,
            calib: 1.0,
            c_r: 1.0,
            upsilon: None,
        }
    }

    /// Inputs read off a potential, with `|x0 − x★|` from its minimizer.
    pub fn from_potential<P: Potential + ?Sized>(p: &P, x0: &[f64], eps: f64) -> Result<Self> {
        let x_star = match p.minimizer_hint() {
            Some(h) => h.to_vec(),
            None => find_minimizer(p, x0, 1e-10)?,
        };
        let mut inputs = Self::new(*p.profile(), p.smoothness(), p.dim(), eps);
        inputs.x0_dist = crate::numeric::dist(x0, &x_star);
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return param(format!("target accuracy must be positive, got {}", self.eps));
        }
        if !(0.0..1.0).contains(&self.frak_e) {
            return param(format!("slack exponent must lie in [0, 1), got {}", self.frak_e));
        }
        if self.d == 0 || self.d_prime == 0 || self.d_prime > self.d {
            return param(format!("need 1 <= d' <= d, got d = {}, d' = {}", self.d, self.d_prime));
        }
        if !(self.calib > 0.0 && self.calib.is_finite()) {
            return param(format!("calibration must be positive, got {}", self.calib));
        }
        if !(self.x0_dist >= 0.0 && self.x0_dist.is_finite()) {
            return param("initial distance must be finite and non-negative");
        }
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return param(format!("L must be positive, got {}", self.lipschitz));
        }
        self.profile.validate()
    }

    fn upsilon(&self) -> Result<f64> {
        match self.upsilon {
            Some(v) => Ok(UpsilonEstimate::user(v)?.value),
            None => Ok(compute_upsilon(&self.profile, self.lipschitz, self.d, self.c_r)?.value),
        }
    }

    fn kl(&self) -> Result<(f64, f64, f64, f64)> {
        match self.profile {
            ConvexityProfile::WeaklyConvexKl { c1, c2, q, r } => Ok((c1, c2, q, r)),
            other => Err(Error::Capability(format!("weak-convex tuning needs a KL profile, got {other:?}"))),
        }
    }

    fn third_order(&self) -> Result<(f64, LaplacianGradBound)> {
        match (self.hessian_lipschitz, self.laplacian_grad) {
            (Some(lt), Some(lap)) => Ok((lt, lap)),
            _ => Err(Error::Capability(
                "this variant needs the Hessian Lipschitz constant and the Laplacian-of-gradient bound".into(),
            )),
        }
    }

    /// `ε ≤ 1 ∧ d' d^{−(1−r)/(2(1+q−r))}`.
    fn check_dimension_free_eps(&self, q: f64, r: f64) -> Result<f64> {
        let bound = 1f64.min(self.d_prime as f64 * (self.d as f64).powf(-(1.0 - r) / (2.0 * (1.0 + q - r))));
        if self.eps > bound {
            return param(format!(
                "eps = {} exceeds the bound 1 ∧ d' d^(-(1-r)/(2(1+q-r))) = {bound}",
                self.eps
            ));
        }
        Ok(bound)
    }
}

/// A step size and iteration count with every intermediate constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPlan {
    pub gamma: f64,
    pub n_steps: u64,
    /// Real-valued `N` before the ceiling, after any clamp adjustment.
    pub n_real: f64,
    pub regime: Regime,
    /// Target accuracy; 0 for a fixed plan.
    pub eps: f64,
    pub constants: BTreeMap<String, f64>,
    /// The step hit its ceiling or a non-ε term won the step minimum.
    pub clamped: bool,
}

impl TuningPlan {
    /// A plan with `(γ, N)` given directly.
    pub fn fixed(gamma: f64, n_steps: u64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || n_steps == 0 {
            return param(format!("fixed plan needs gamma > 0 and N >= 1, got gamma = {gamma}, N = {n_steps}"));
        }
        Ok(Self {
            gamma,
            n_steps,
            n_real: n_steps as f64,
            regime: Regime::Fixed,
            eps: 0.0,
            constants: BTreeMap::new(),
            clamped: false,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.gamma * self.n_steps as f64
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    /// `γ` and `N` from the formula before calibration and clamping.
    pub fn formula(&self) -> (f64, f64) {
        (self.constants["gamma_formula"], self.constants["n_formula"])
    }
}

struct Builder {
    regime: Regime,
    eps: f64,
    calib: f64,
    constants: BTreeMap<String, f64>,
    clamped: bool,
}

impl Builder {
    fn new(regime: Regime, eps: f64, calib: f64) -> Self {
        let mut constants = BTreeMap::new();
        constants.insert("calib".into(), calib);
        Self {
            regime,
            eps,
            calib,
            constants,
            clamped: false,
        }
    }

    fn set(&mut self, key: &str, v: f64) -> f64 {
        self.constants.insert(key.to_string(), v);
        v
    }

    /// Minimum of named terms; records each finite term and flags a non-ε winner.
    /// An infinite term is inactive and left out of the constants.
    fn min_terms(&mut self, terms: &[(&str, f64)], eps_term: usize) -> f64 {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (i, (name, v)) in terms.iter().enumerate() {
            if v.is_finite() {
                self.set(name, *v);
            }
            if *v < best {
                best = *v;
                arg = i;
            }
        }
        if arg != eps_term {
            self.clamped = true;
        }
        best
    }

    fn max_terms(&mut self, terms: &[(&str, f64)]) -> f64 {
        terms
            .iter()
            .map(|(name, v)| self.set(name, *v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn finish(mut self, gamma_f: f64, n_f: f64, gamma0: f64) -> Result<TuningPlan> {
        if !(gamma_f > 0.0 && gamma_f.is_finite() && n_f > 0.0 && n_f.is_finite()) {
            return Err(Error::Numeric {
                message: format!("tuning formula produced gamma = {gamma_f}, N = {n_f}"),
                iterations: 0,
                best: None,
            });
        }
        self.set("gamma_formula", gamma_f);
        self.set("n_formula", n_f);
        self.set("gamma0", gamma0);
        let mut gamma = gamma_f / self.calib;
        let mut n_real = n_f * self.calib;
        if gamma > gamma0 {
            n_real *= gamma / gamma0;
            gamma = gamma0;
            self.clamped = true;
        }
        let n_steps = n_real.ceil().max(1.0);
        if n_steps > u64::MAX as f64 {
            return param(format!("iteration count {n_real:e} does not fit in 64 bits"));
        }
        self.set("t_n", gamma * n_steps);
        Ok(TuningPlan {
            gamma,
            n_steps: n_steps as u64,
            n_real,
            regime: self.regime,
            eps: self.eps,
            constants: self.constants,
            clamped: self.clamped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakVariant {
    #[serde(rename = "i.a")]
    Ia,
    #[serde(rename = "i.b")]
    Ib,
    #[serde(rename = "ii.a")]
    IIa,
    #[serde(rename = "ii.b")]
    IIb,
}

/// Weak-convex (KL) tunings.
pub fn tune_weak(inputs: &TuningInputs, variant: WeakVariant) -> Result<TuningPlan> {
    inputs.validate()?;
    let (c1, c2, q, r) = inputs.kl()?;
    let d = inputs.d as f64;
    let dp = inputs.d_prime as f64;
    let l = inputs.lipschitz;
    let e = inputs.frak_e;
    let eps = inputs.eps;
    let gamma0 = 0.125 * (1.0 / (d * l.max(c2))).min(0.125);
    let k = 1.0 + q - r;

    match variant {
        WeakVariant::Ia => {
            let ups = inputs.upsilon()?;
            let mut b = Builder::new(Regime::WeakIa, eps, inputs.calib);
            b.set("upsilon", ups);
            let t1 = c1.powf(2.0 * (1.0 + e)) / (d * l * l * ups.powf(2.0 * r * (1.0 + e))) * eps * eps;
            let t2 = d / (c2 * ups.powf(1.0 - q - 2.0 * r * e));
            let t3 = if inputs.x0_dist == 0.0 {
                f64::INFINITY
            } else {
                let a = (1.0 - q) / (1.0 + q);
                d / (c2 * (1.0 + q).powf(a) * c2.powf(a) * ups.powf(-2.0 * r * e) * inputs.x0_dist.powf(2.0 * a))
            };
            let t4 = ups.powf(2.0 * r * (1.0 + e) + q - 1.0) * d * l * l / (c2 * c1.powf(2.0 * (1.0 + e)));
            let gamma = b.min_terms(&[("gamma_term_1", t1), ("gamma_term_2", t2), ("gamma_term_3", t3), ("gamma_term_4", t4)], 0);
            let n1 = ups.powf((1.0 + 3.0 * r) / 2.0 * (1.0 + e)) * c1.powf(-1.5 * (1.0 + e)) / (gamma * eps);
            let n2 = dp * ups.powf(2.0 * r * (1.0 + e)) * c1.powf(-2.0 * (1.0 + e)) / (gamma * eps * eps);
            let n = b.max_terms(&[("n_term_1", n1), ("n_term_2", n2)]);
            b.finish(gamma, n, gamma0)
        }
        WeakVariant::Ib => {
            let bound = inputs.check_dimension_free_eps(q, r)?;
            let mut b = Builder::new(Regime::WeakIb, eps, inputs.calib);
            b.set("eps_bound", bound);
            let gamma = eps * eps * d.powf(-(1.0 + 2.0 * r / k + e));
            let n = eps.powi(-4) * dp * d.powf(1.0 + 4.0 * r / k + e);
            b.finish(gamma, n, gamma0)
        }
        WeakVariant::IIa => {
            let (lt, lap) = inputs.third_order()?;
            let lap = lap.sup_norm(inputs.d);
            let ups = inputs.upsilon()?;
            let mut b = Builder::new(Regime::WeakIIa, eps, inputs.calib);
            b.set("upsilon", ups);
            b.set("laplacian_grad_sup", lap);
            let m1 = 1.0 / (l * c2.sqrt() * ups.powf((1.0 - q + 2.0 * r) / 2.0 * (1.0 + e)));
            let m2 = c1.powf(1.0 + e) / (l * lt * d * ups.powf(2.0 * r * (1.0 + e)));
            let m3 = 1.0 / (lap * ups.powf(r * (1.0 + e)));
            let inner = b.min_terms(&[("c21_term_1", m1), ("c21_term_2", m2), ("c21_term_3", m3)], usize::MAX);
            b.clamped = false;
            let c21 = b.set("c21", c1.powf(1.0 + e) * inner);
            let c12 = b.max_terms(&[
                ("c12_term_1", dp * ups.powf(2.0 * r * (1.0 + e)) / c1.powf(2.0 * (1.0 + e))),
                ("c12_term_2", eps * ups.powf((1.0 + 3.0 * r) / 2.0 * (1.0 + e)) / c1.powf(1.5 + e)),
            ]);
            b.set("c12", c12);
            b.finish(c21 * eps, c12 / c21 * eps.powi(-3), gamma0)
        }
        WeakVariant::IIb => {
            let (_, lap) = inputs.third_order()?;
            let bound = inputs.check_dimension_free_eps(q, r)?;
            let rho = lap.exponent();
            let mut b = Builder::new(Regime::WeakIIb, eps, inputs.calib);
            b.set("eps_bound", bound);
            b.set("laplacian_exponent", rho);
            let ge = (1.0 + 2.0 * r / k).max(rho + r / k) + e;
            let ne = (1.0 + 4.0 * r / k).max(rho + 3.0 * r / k) + e;
            b.set("gamma_d_exponent", ge);
            b.set("n_d_exponent", ne);
            b.finish(eps * d.powf(-ge), eps.powi(-3) * dp * d.powf(ne), gamma0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScVariant {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
}

/// Strongly convex tunings.
pub fn tune_sc(inputs: &TuningInputs, variant: ScVariant) -> Result<TuningPlan> {
    inputs.validate()?;
    let ConvexityProfile::StronglyConvex { rho } = inputs.profile else {
        return Err(Error::Capability(format!(
            "strongly convex tuning needs a strongly convex profile, got {:?}",
            inputs.profile
        )));
    };
    let d = inputs.d as f64;
    let dp = inputs.d_prime as f64;
    let l = inputs.lipschitz;
    let eps = inputs.eps;
    let x0 = inputs.x0_dist;
    match variant {
        ScVariant::I => {
            let mut b = Builder::new(Regime::ScI, eps, inputs.calib);
            let t3 = if x0 == 0.0 { f64::INFINITY } else { d / (l * l * x0 * x0) };
            let gamma = b.min_terms(
                &[
                    ("gamma_term_1", rho * rho / (l * l * d) * eps * eps),
                    ("gamma_term_2", rho / (l * l)),
                    ("gamma_term_3", t3),
                ],
                0,
            );
            let n = b.max_terms(&[
                ("n_term_1", dp / (rho * rho * gamma * eps * eps)),
                ("n_term_2", d.sqrt() * rho.powf(-1.5) / (eps * gamma)),
            ]);
            b.finish(gamma, n, rho / (l * l))
        }
        ScVariant::II => {
            let (lt, lap) = inputs.third_order()?;
            let lap = lap.sup_norm(inputs.d);
            let mut b = Builder::new(Regime::ScII, eps, inputs.calib);
            let s1 = b.set("b2_term_1", d * d);
            let s2 = b.set("b2_term_2", l.powi(4) * d / rho.powi(3));
            let s3 = b.set("b2_term_3", l * l * (1.0 / (rho * rho) + lt * lt / rho.powi(4)));
            let s4 = b.set("b2_term_4", lap * lap / (rho * rho));
            let s5 = b.set("b2_term_5", 2.0 * l.powi(4) / (rho * rho) * x0 * x0);
            let b2 = b.set("b2", s1 + s2 + s3 + s4 + s5);
            let gamma = eps / b2.sqrt();
            let n = b.max_terms(&[
                ("n_term_1", eps.powi(-3) * b2.sqrt() * dp / (rho * rho)),
                ("n_term_2", 1.0 / gamma),
                ("n_term_3", d / (gamma * rho)),
            ]);
            b.finish(gamma, n, 1.0 / l)
        }
    }
}

/// Inputs of the posterior-level tunings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesInputs {
    /// Per-observation curvature profile.
    pub profile: ConvexityProfile,
    /// Per-observation gradient Lipschitz constant.
    pub lipschitz: f64,
    pub d: usize,
    pub n: usize,
    pub alpha_c: f64,
    pub poincare: f64,
    pub b1: f64,
    pub calib: f64,
    /// The caller certifies `|θ̂₀ − θ★|² ≤ d n⁻²` (needed by Bayes-SC-i.b).
    pub initial_certified: bool,
}

impl BayesInputs {
    pub fn new(profile: ConvexityProfile, lipschitz: f64, d: usize, n: usize) -> Self {
        Self {
            profile,
            lipschitz,
            d,
            n,
            alpha_c: 1.0,
            poincare: 1.0,
            b1: 1.0,
            calib: 1.0,
            initial_certified: false,
        }
    }
}

pub fn tune_bayes(inputs: &BayesInputs, regime: Regime) -> Result<TuningPlan> {
    let BayesInputs {
        profile,
        lipschitz: l,
        d,
        n,
        alpha_c,
        poincare,
        b1,
        calib,
        initial_certified,
    } = inputs.clone();
    profile.validate()?;
    if n < 2 {
        return param(format!("posterior tuning needs n >= 2, got {n}"));
    }
    if !(calib > 0.0) {
        return param("calibration must be positive");
    }
    if d > n && regime != Regime::BayesScIb {
        return param(format!("dimension d = {d} exceeds sample size n = {n}"));
    }
    let eps = epsilon_n(poincare, l, alpha_c, d, n, b1)?;
    let nf = n as f64;
    let df = d as f64;
    let ai = 1.0 / alpha_c;
    let mut b = Builder::new(regime, eps.eps, calib);
    b.set("eps_n", eps.eps);
    b.set("eps_n_sq", eps.eps_sq);
    b.set("eps_n_valid", if eps.valid { 1.0 } else { 0.0 });
    let l_agg = b.set("l_aggregated", nf * l);

    let kl_r = |allow_sc: bool| -> Result<(f64, f64)> {
        match profile {
            ConvexityProfile::WeaklyConvexKl { c2, q, r, .. } if q == r => Ok((r, c2)),
            ConvexityProfile::WeaklyConvexKl { .. } => param("posterior weak-convex tunings need r = q"),
            ConvexityProfile::StronglyConvex { .. } if allow_sc => Ok((0.0, l)),
            other => Err(Error::Capability(format!("regime {regime:?} does not apply to profile {other:?}"))),
        }
    };
    let weak_gamma0 = |c2: f64| 0.125 * (1.0 / (df * l_agg.max(nf * c2))).min(0.125);

    match regime {
        Regime::BayesWeakI => {
            let (r, c2) = kl_r(false)?;
            b.set("r", r);
            let gamma = df.powf(-(2.0 * r + 1.0 - ai)) * nf.powf(-2.0 * r - ai);
            let n_f = nf.powf(2.0 * ai + 4.0 * r) * df.powf(1.0 + 4.0 * r - 2.0 * ai);
            b.finish(gamma, n_f, weak_gamma0(c2))
        }
        Regime::BayesWeakII => {
            let (r, c2) = kl_r(true)?;
            if r != 0.0 {
                return param(format!("Bayes-Weak-ii needs r = q = 0, got r = {r}"));
            }
            let gamma = nf.powi(-2);
            let n_f = nf.powf(0.5 * (1.0 + ai)) * df.powf(0.5 * (1.0 - ai));
            b.finish(gamma, n_f, weak_gamma0(c2))
        }
        Regime::BayesWeakIII => {
            let (r, c2) = kl_r(false)?;
            if !(r > 0.0 && r < 1.0) {
                return param(format!("Bayes-Weak-iii needs r in (0, 1), got {r}"));
            }
            b.set("r", r);
            let g1 = nf.powf(-(2.0 * r + ai)) * df.powf(-1.0 - 2.0 * r + ai);
            let g2 = nf.powf(-2.0 / (1.0 + r)) * df.powf(2.0 * r / (1.0 + r));
            let gamma = b.min_terms(&[("gamma_term_1", g1), ("gamma_term_2", g2)], usize::MAX);
            b.clamped = false;
            let m = b.max_terms(&[
                ("n_bracket_1", nf.powf(0.5 * ai - 1.5 * (1.0 - r)) * df.powf((1.0 + 3.0 * r) / 2.0 - 0.5 * ai)),
                ("n_bracket_2", df.powf(2.0 * r - ai) * nf.powf(ai - 2.0 * (1.0 - r))),
            ]);
            b.finish(gamma, m / gamma, weak_gamma0(c2))
        }
        Regime::BayesScIa | Regime::BayesScIb => {
            if !profile.is_strongly_convex() {
                return Err(Error::Capability(format!("regime {regime:?} needs a strongly convex profile")));
            }
            let (gamma, n_f) = if regime == Regime::BayesScIa {
                (nf.powi(-2), nf.powf(0.5 * (1.0 + ai)) * df.powf(0.5 * (1.0 - ai)))
            } else {
                if !initial_certified {
                    return Err(Error::Capability(
                        "Bayes-SC-i.b needs a certified initial point with |theta0 - theta*|^2 <= d/n^2".into(),
                    ));
                }
                (1.0 / nf, nf.max(df))
            };
            b.finish(gamma, n_f, 1.0 / l_agg)
        }
        other => param(format!("{other:?} is not a posterior regime")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kl(c1: f64, c2: f64, r: f64) -> ConvexityProfile {
        ConvexityProfile::WeaklyConvexKl { c1, c2, q: r, r }
    }

    fn weak_inputs(r: f64, d: usize, eps: f64) -> TuningInputs {
        let mut s = SmoothnessInfo::new(1.0);
        s.hessian_lipschitz = Some(1.0);
        s.laplacian_grad = Some(LaplacianGradBound::Sup(1.0));
        TuningInputs::new(kl(1.0, 1.0, r), &s, d, eps)
    }

    #[test]
    fn upsilon_examples() {
        let u = compute_upsilon(&kl(1.0, 1.0, 0.0), 1.0, 1, 1.0).unwrap();
        assert_eq!(u.value, 1.0);
        let a = compute_upsilon(&kl(0.5, 2.0, 0.0), 2.0, 10, 1.0).unwrap().value;
        assert_relative_eq!(a, 2.0 / 0.5 * 10.0 * 21f64.ln(), max_relative = 1e-14);
        for r in [0.0, 0.2, 0.5] {
            let p = kl(0.3, 1.5, r);
            assert!(compute_upsilon(&p, 1.5, 2, 1.0).unwrap().value >= compute_upsilon(&p, 1.5, 1, 1.0).unwrap().value);
        }
        let bad = ConvexityProfile::WeaklyConvexKl { c1: 1.0, c2: 1.0, q: 0.0, r: 1.0 };
        assert!(matches!(compute_upsilon(&bad, 1.0, 1, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn weak_ib_example() {
        let mut inp = weak_inputs(0.0, 1, 0.1);
        inp.frak_e = 0.0;
        let plan = tune_weak(&inp, WeakVariant::Ib).unwrap();
        let (g, n) = plan.formula();
        assert_relative_eq!(g, 0.01, max_relative = 1e-14);
        assert_relative_eq!(n, 1e4, max_relative = 1e-12);
        assert!(!plan.clamped);
    }

    #[test]
    fn weak_ib_exponent() {
        let r = 1.0 / 3.0;
        let mut inp = weak_inputs(r, 2, 0.01);
        inp.frak_e = 0.0;
        let n2 = tune_weak(&inp, WeakVariant::Ib).unwrap().formula().1;
        inp.d = 4;
        inp.d_prime = 2;
        let n4 = tune_weak(&inp, WeakVariant::Ib).unwrap().formula().1;
        assert_relative_eq!((n4 / n2).log2(), 7.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn weak_ib_rejects_large_eps() {
        let mut inp = weak_inputs(0.5, 16, 0.9);
        inp.d_prime = 1;
        assert!(matches!(tune_weak(&inp, WeakVariant::Ib), Err(Error::Parameter(_))));
    }

    #[test]
    fn weak_ia_third_term_drops_at_minimizer() {
        let inp = weak_inputs(0.25, 3, 0.1);
        let plan = tune_weak(&inp, WeakVariant::Ia).unwrap();
        assert_eq!(plan.constant("gamma_term_3"), None);
        let mut far = inp.clone();
        far.x0_dist = 2.0;
        assert!(tune_weak(&far, WeakVariant::Ia).unwrap().constant("gamma_term_3").unwrap().is_finite());
    }

    #[test]
    fn weak_ii_needs_third_order_data() {
        let inp = TuningInputs::new(kl(1.0, 1.0, 0.0), &SmoothnessInfo::new(1.0), 1, 0.1);
        assert!(matches!(tune_weak(&inp, WeakVariant::IIa), Err(Error::Capability(_))));
        assert!(matches!(tune_weak(&inp, WeakVariant::IIb), Err(Error::Capability(_))));
    }

    #[test]
    fn sc_i_example() {
        let inp = TuningInputs::new(ConvexityProfile::StronglyConvex { rho: 1.0 }, &SmoothnessInfo::new(1.0), 1, 0.1);
        let plan = tune_sc(&inp, ScVariant::I).unwrap();
        assert_relative_eq!(plan.gamma, 0.01, max_relative = 1e-14);
        assert_relative_eq!(plan.n_real, 1e4, max_relative = 1e-12);
        assert_eq!(plan.n_steps, 10_000);
        assert!(!plan.clamped);
        let big = TuningInputs { eps: 20.0, ..inp };
        let plan = tune_sc(&big, ScVariant::I).unwrap();
        assert!(plan.clamped);
        assert_eq!(plan.gamma, 1.0);
    }

    #[test]
    fn sc_ii_example() {
        let mut s = SmoothnessInfo::new(1.0);
        s.hessian_lipschitz = Some(1.0);
        s.laplacian_grad = Some(LaplacianGradBound::Sup(0.0));
        let inp = TuningInputs::new(ConvexityProfile::StronglyConvex { rho: 1.0 }, &s, 1, 0.1);
        let plan = tune_sc(&inp, ScVariant::II).unwrap();
        assert_relative_eq!(plan.constant("b2").unwrap(), 4.0);
        assert_relative_eq!(plan.gamma, 0.05, max_relative = 1e-14);
        assert_relative_eq!(plan.n_real, 2000.0, max_relative = 1e-12);
    }

    #[test]
    fn bayes_examples() {
        let sc = ConvexityProfile::StronglyConvex { rho: 1.0 };
        let plan = tune_bayes(&BayesInputs::new(sc, 1.0, 4, 100), Regime::BayesScIa).unwrap();
        assert_relative_eq!(plan.gamma, 1e-4, max_relative = 1e-14);
        assert_eq!(plan.n_steps, 100);
        let weak = tune_bayes(&BayesInputs::new(kl(1.0, 1.0, 0.0), 1.0, 4, 100), Regime::BayesWeakII).unwrap();
        assert_eq!((weak.gamma, weak.n_steps), (plan.gamma, plan.n_steps));
        let mut ib = BayesInputs::new(sc, 1.0, 100, 64);
        assert!(matches!(tune_bayes(&ib, Regime::BayesScIb), Err(Error::Capability(_))));
        ib.initial_certified = true;
        let plan = tune_bayes(&ib, Regime::BayesScIb).unwrap();
        assert_eq!(plan.n_steps, 100);
        assert_relative_eq!(plan.gamma, 1.0 / 64.0);
        assert!(matches!(tune_bayes(&BayesInputs::new(sc, 1.0, 100, 64), Regime::BayesScIa), Err(Error::Parameter(_))));
    }

    #[test]
    fn clamp_preserves_horizon() {
        let inp = TuningInputs { calib: 1e-6, ..weak_inputs(0.0, 2, 0.1) };
        let plan = tune_weak(&inp, WeakVariant::Ib).unwrap();
        assert!(plan.clamped);
        assert_eq!(plan.gamma, plan.constant("gamma0").unwrap());
        let (g, n) = plan.formula();
        assert_relative_eq!(plan.n_real * plan.gamma, g * n, max_relative = 1e-12);
    }
}
