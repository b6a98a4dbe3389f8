//! Step sizes, convergence factors and iteration/communication complexity
//! predicted for each iteration scheme.
//!
//! Every predictor takes a [`TheoryInputs`] bundle and returns a
//! [`TheoryReport`]. Reports never panic on bad inputs; a predictor whose
//! preconditions fail returns `applicable = false` with a reason.
//!
//! Where a result prescribes a step size by equality the report uses it
//! verbatim. Where it only gives a strict upper bound the default step is
//! `0.999` times the bound, or `gamma_scale` times the bound when set.

use serde::{Deserialize, Serialize};

use crate::loss::{value, Problem};
use crate::quantizers::{ceil_log2, QuantizerSpec};
use crate::sparse::dist_sq;

/// Default fraction of a strict step-size bound.
pub const STRICT_SAFETY: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Centrally compressed GD, strongly convex.
    QgdStrong,
    /// Centrally compressed GD, convex.
    QgdConvex,
    /// Centrally compressed stale IAG, strongly convex.
    CiagStrong,
    /// Centrally compressed stale IAG, convex.
    CiagConvex,
    /// Per-worker compressed synchronous GD, strongly convex.
    DqgdStrong,
    /// Per-worker compressed synchronous GD, convex (ergodic average).
    DqgdConvex,
    /// Per-worker compressed stale IAG, strongly convex.
    QiagStrong,
    /// Per-worker compressed stale IAG with bounded component gradients.
    QiagBounded,
}

impl StepRule {
    pub const ALL: [StepRule; 8] = [
        StepRule::QgdStrong,
        StepRule::QgdConvex,
        StepRule::CiagStrong,
        StepRule::CiagConvex,
        StepRule::DqgdStrong,
        StepRule::DqgdConvex,
        StepRule::QiagStrong,
        StepRule::QiagBounded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StepRule::QgdStrong => "qgd-strong",
            StepRule::QgdConvex => "qgd-convex",
            StepRule::CiagStrong => "ciag-strong",
            StepRule::CiagConvex => "ciag-convex",
            StepRule::DqgdStrong => "dqgd-strong",
            StepRule::DqgdConvex => "dqgd-convex",
            StepRule::QiagStrong => "qiag-strong",
            StepRule::QiagBounded => "qiag-bounded",
        }
    }

    pub fn parse(s: &str) -> Option<StepRule> {
        StepRule::ALL.into_iter().find(|r| r.name() == s)
    }
}

/// Quantity a predicted bound applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMetric {
    /// `E|x_k - x*|^2`
    Dist2,
    /// `E f(x_k) - f*`
    FGap,
    /// `min_{k <= K} E|grad f(x_k)|^2`
    MinGradNorm2,
    /// `E f(mean of x_0..x_{T-1}) - f*`
    ErgodicGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub mu: f64,
    /// Component gradient Lipschitz constant.
    pub l: f64,
    /// Aggregate gradient Lipschitz bound.
    pub l_bar: f64,
    pub m: usize,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Expected-nnz bound of the quantizer.
    pub c: f64,
    /// Bits per transmitted entry.
    pub entry_bits: u64,
    /// Sparsity factor of the data.
    pub sigma: f64,
    pub tau: usize,
    pub theta: f64,
    /// Uniform bound on component gradient norms.
    pub grad_bound: Option<f64>,
    /// `sum_i |grad f_i(x*)|^2`
    pub grad_star_sq: Option<f64>,
    /// `|x_0 - x*|^2`
    pub dist0_sq: Option<f64>,
    /// `f(x_0) - f*`
    pub gap0: Option<f64>,
    /// Target accuracy for complexity outputs.
    pub eps: Option<f64>,
    /// Explicit step size; strict-bound predictors check it is admissible.
    pub gamma: Option<f64>,
    /// Fraction of a strict bound used when `gamma` is unset.
    pub gamma_scale: Option<f64>,
}

impl TheoryInputs {
    /// Inputs for running `quantizer` on `problem` from `x0`.
    pub fn from_problem(problem: &Problem, quantizer: &QuantizerSpec, tau: usize, theta: f64, x0: &[f64]) -> Self {
        let b = quantizer.bounds(problem.dim);
        let c = &problem.curvature;
        TheoryInputs {
            mu: c.mu,
            l: c.l_component,
            l_bar: c.l_bar,
            m: problem.m(),
            d: problem.dim,
            alpha: b.alpha,
            beta: b.beta,
            c: b.c,
            entry_bits: quantizer.entry_bits(),
            sigma: c.sparsity.sigma,
            tau,
            theta,
            grad_bound: c.c_estimate,
            grad_star_sq: Some(problem.grad_star_sq),
            dist0_sq: Some(dist_sq(x0, &problem.x_star)),
            gap0: Some(value(&problem.shards, &problem.loss, x0) - problem.f_star),
            eps: None,
            gamma: None,
            gamma_scale: None,
        }
    }

    fn bits_per_entry_with_index(&self) -> f64 {
        (ceil_log2(self.d as u64) + self.entry_bits) as f64
    }

    fn strict_gamma(&self, bound: f64) -> Result<f64, String> {
        let g = match self.gamma {
            Some(g) => g,
            None => self.gamma_scale.unwrap_or(STRICT_SAFETY) * bound,
        };
        if g > 0.0 && g < bound {
            Ok(g)
        } else {
            Err(format!("step {g} outside admissible interval (0, {bound})"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub rule: StepRule,
    pub metric: BoundMetric,
    /// Step size the prediction refers to.
    pub gamma: f64,
    /// Largest admissible step (equal to `gamma` for equality rules).
    pub gamma_bound: f64,
    /// Contraction per block of `block` iterations, for linear rates.
    pub rate_factor: Option<f64>,
    pub block: usize,
    /// Coefficient `a` of a sublinear bound `a / (k + offset)`.
    pub sublinear_coeff: Option<f64>,
    pub sublinear_offset: f64,
    /// Asymptotic error floor; zero for exact convergence.
    pub residual: Option<f64>,
    /// Initial error the bound scales.
    pub eps0: Option<f64>,
    pub k_star: Option<f64>,
    pub b_star: Option<f64>,
    pub applicable: bool,
    pub reason: Option<String>,
}

impl TheoryReport {
    fn new(rule: StepRule, metric: BoundMetric) -> Self {
        TheoryReport {
            rule,
            metric,
            gamma: f64::NAN,
            gamma_bound: f64::NAN,
            rate_factor: None,
            block: 1,
            sublinear_coeff: None,
            sublinear_offset: 1.0,
            residual: Some(0.0),
            eps0: None,
            k_star: None,
            b_star: None,
            applicable: true,
            reason: None,
        }
    }

    fn refuse(mut self, reason: impl Into<String>) -> Self {
        self.applicable = false;
        self.reason = Some(reason.into());
        self
    }

    fn with_rate(mut self, rate: f64) -> Self {
        self.rate_factor = Some(rate);
        if (0.0..1.0).contains(&rate) {
            self
        } else {
            self.refuse(format!("contraction factor {rate} not in [0, 1)"))
        }
    }

    /// Per-iteration contraction `rate_factor^(1/block)`.
    pub fn per_iteration_factor(&self) -> Option<f64> {
        self.rate_factor.map(|r| r.powf(1.0 / self.block as f64))
    }

    /// Predicted bound on [`Self::metric`] after `k` iterations.
    pub fn bound_at(&self, k: usize) -> Option<f64> {
        let residual = self.residual.unwrap_or(0.0);
        if let (Some(r), Some(e0)) = (self.rate_factor, self.eps0) {
            return Some(r.powf(k as f64 / self.block as f64) * e0 + residual);
        }
        self.sublinear_coeff
            .map(|a| a / (k as f64 + self.sublinear_offset) + residual)
    }
}

fn missing(what: &str) -> String {
    format!("{what} not supplied")
}

/// Centrally compressed GD on a strongly convex problem:
/// `gamma = 2 / (alpha (mu + L_bar))`, contraction
/// `1 - 4 mu L_bar / (alpha (mu + L_bar)^2)` on `E|x_k - x*|^2`.
pub fn thm_qgd_sc(inp: &TheoryInputs) -> TheoryReport {
    let mut r = TheoryReport::new(StepRule::QgdStrong, BoundMetric::Dist2);
    if !(inp.mu > 0.0) {
        return r.refuse("not strongly convex (mu = 0)");
    }
    let (mu, lb, a) = (inp.mu, inp.l_bar, inp.alpha);
    r.gamma = (1.0 / a) * (2.0 / (mu + lb));
    r.gamma_bound = r.gamma;
    r.eps0 = inp.dist0_sq;
    r = r.with_rate(1.0 - (1.0 / a) * (4.0 * mu * lb) / ((mu + lb) * (mu + lb)));
    if !r.applicable {
        return r;
    }
    if let (Some(e0), Some(eps)) = (inp.dist0_sq, inp.eps) {
        let k = a * (mu + lb) * (mu + lb) / (4.0 * mu * lb) * (e0 / eps).ln();
        r.k_star = Some(k);
        r.b_star = Some(inp.bits_per_entry_with_index() * inp.c * k);
    }
    r
}

/// Centrally compressed GD, convex: `gamma = 1 / (L_bar alpha)`,
/// `E f(x_T) - f* <= alpha L_bar |x_0 - x*|^2 / (2 (T + 1))`.
pub fn thm_qgd_cvx(inp: &TheoryInputs) -> TheoryReport {
    let mut r = TheoryReport::new(StepRule::QgdConvex, BoundMetric::FGap);
    let (lb, a) = (inp.l_bar, inp.alpha);
    r.gamma = 1.0 / (lb * a);
    r.gamma_bound = r.gamma;
    r.eps0 = inp.dist0_sq;
    r.sublinear_coeff = inp.dist0_sq.map(|e0| a * lb / 2.0 * e0);
    if let (Some(e0), Some(eps)) = (inp.dist0_sq, inp.eps) {
        let t = a * lb / 2.0 * (e0 / eps);
        r.k_star = Some(t);
        r.b_star = Some(inp.bits_per_entry_with_index() * inp.c * t);
    }
    r
}

/// Largest admissible step for the centrally compressed stale IAG.
pub fn ciag_gamma_bar(inp: &TheoryInputs) -> f64 {
    let (mu, lb, a, tau) = (inp.mu, inp.l_bar, inp.alpha, inp.tau as f64);
    (mu / (a.sqrt() * tau * lb * lb)).min(1.0 / (a * lb))
}

/// Centrally compressed stale IAG, strongly convex:
/// `E f(x_k) - f* <= (p + q)^(k / (1 + 2 tau)) (f(x_0) - f*)` with
/// `p = 1 - mu gamma`, `q = L_bar^4 gamma^3 tau^2 alpha / mu`.
/// With `tau = 0` this is the compressed GD result.
pub fn thm_ciag_sc(inp: &TheoryInputs) -> TheoryReport {
    if inp.tau == 0 {
        let mut r = thm_qgd_sc(inp);
        r.rule = StepRule::CiagStrong;
        return r;
    }
    let mut r = TheoryReport::new(StepRule::CiagStrong, BoundMetric::FGap);
    if !(inp.mu > 0.0) {
        return r.refuse("not strongly convex (mu = 0)");
    }
    let (mu, lb, a, tau) = (inp.mu, inp.l_bar, inp.alpha, inp.tau as f64);
    let bar = ciag_gamma_bar(inp);
    r.gamma_bound = bar;
    let g = match inp.strict_gamma(bar) {
        Ok(g) => g,
        Err(e) => return r.refuse(e),
    };
    r.gamma = g;
    let p = 1.0 - mu * g;
    let q = lb.powi(4) * g.powi(3) * tau * tau * a / mu;
    r.block = 1 + 2 * inp.tau;
    r.eps0 = inp.gap0;
    r = r.with_rate(p + q);
    if !r.applicable {
        return r;
    }
    if let (Some(e0), Some(eps)) = (inp.gap0, inp.eps) {
        let k = (1.0 + 2.0 * tau) * mu / (g * (mu * mu - lb.powi(4) * g * g * tau * tau * a)) * (e0 / eps).ln();
        r.k_star = Some(k);
        r.b_star = Some(inp.bits_per_entry_with_index() * inp.c * k);
    }
    r
}

/// Centrally compressed stale IAG without strong convexity:
/// `min E|grad f|^2 <= (f(x_0) - f*) / (a (K + 1))`,
/// `a = gamma/2 - gamma beta (1 + 1/theta)`, valid when
/// `beta < 1 / (2 (1 + 1/theta))`.
pub fn thm_ciag_nsc(inp: &TheoryInputs) -> TheoryReport {
    let mut r = TheoryReport::new(StepRule::CiagConvex, BoundMetric::MinGradNorm2);
    let (lb, beta, th, tau) = (inp.l_bar, inp.beta, inp.theta, inp.tau as f64);
    if !(th > 0.0) {
        return r.refuse("theta must be positive");
    }
    let gate = 1.0 / (2.0 * (1.0 + 1.0 / th));
    if beta >= gate {
        return r.refuse(format!("quantizer too coarse: beta = {beta} >= {gate}"));
    }
    let bound = 1.0 / (1.0 + 8.0 * (1.0 + beta * (1.0 + th)) * tau * (tau + 1.0)).sqrt() * (2.0 / lb);
    r.gamma_bound = bound;
    let g = match inp.strict_gamma(bound) {
        Ok(g) => g,
        Err(e) => return r.refuse(e),
    };
    r.gamma = g;
    let a = g / 2.0 - g * beta * (1.0 + 1.0 / th);
    r.eps0 = inp.gap0;
    r.sublinear_coeff = inp.gap0.map(|e0| e0 / a);
    r
}

/// Per-worker compressed synchronous GD with
/// `gamma = 1 / (L alpha (1 + theta) sigma)`.
///
/// Strongly convex: `E|x_k - x*|^2 <= (1 - mu gamma)^k |x_0 - x*|^2 +
/// sum_i |grad f_i(x*)|^2 / (mu theta L)`. Convex: the ergodic average
/// satisfies `E f(x_bar_T) - f* <= |x_0 - x*|^2 / (gamma T) +
/// sum_i |grad f_i(x*)|^2 / (theta L)`.
pub fn thm_dqgd(inp: &TheoryInputs, convex_only: bool) -> TheoryReport {
    let (rule, metric) = if convex_only {
        (StepRule::DqgdConvex, BoundMetric::ErgodicGap)
    } else {
        (StepRule::DqgdStrong, BoundMetric::Dist2)
    };
    let mut r = TheoryReport::new(rule, metric);
    let (mu, l, a, th, sigma) = (inp.mu, inp.l, inp.alpha, inp.theta, inp.sigma);
    if !(th > 0.0) {
        return r.refuse("theta must be positive");
    }
    r.gamma = 1.0 / (l * a * (1.0 + th) * sigma);
    r.gamma_bound = r.gamma;
    r.eps0 = inp.dist0_sq;
    if convex_only {
        r.sublinear_coeff = inp.dist0_sq.map(|e0| e0 / r.gamma);
        r.sublinear_offset = 0.0;
        r.residual = inp.grad_star_sq.map(|g| g / (th * l));
    } else {
        if !(mu > 0.0) {
            return r.refuse("not strongly convex (mu = 0)");
        }
        let rate = 1.0 - mu * r.gamma;
        r = r.with_rate(rate);
        r.residual = inp.grad_star_sq.map(|g| g / (mu * th * l));
    }
    r
}

/// Largest admissible step for the per-worker compressed stale IAG.
pub fn qiag_gamma_bar(inp: &TheoryInputs) -> f64 {
    let (mu, l, lb, a, th, sigma) = (inp.mu, inp.l, inp.l_bar, inp.alpha, inp.theta, inp.sigma);
    let (m, tau) = (inp.m as f64, inp.tau as f64);
    2.0 * mu / (1.0 + m * sigma * a * l * l * (2.0 * lb * lb * tau * tau + (1.0 + th)))
}

/// Per-worker compressed stale IAG.
///
/// Strongly convex:
/// `E|x_k - x*|^2 <= (p + q)^(k / (1 + 2 tau)) |x_0 - x*|^2 + e / (1 - p - q)`.
/// Bounded gradients:
/// `min E|grad f|^2 <= 2 (f(x_0) - f*) / (gamma (K + 1)) + 2 beta sigma m C^2`.
pub fn thm_qiag(inp: &TheoryInputs, bounded_grad: bool) -> TheoryReport {
    let (mu, l, lb, a, th, sigma) = (inp.mu, inp.l, inp.l_bar, inp.alpha, inp.theta, inp.sigma);
    let (m, tau) = (inp.m as f64, inp.tau as f64);
    if bounded_grad {
        let mut r = TheoryReport::new(StepRule::QiagBounded, BoundMetric::MinGradNorm2);
        let bound = 1.0 / (1.0 + (1.0 + 8.0 * tau * (tau + 1.0)).sqrt()) * (2.0 / lb);
        r.gamma_bound = bound;
        let g = match inp.strict_gamma(bound) {
            Ok(g) => g,
            Err(e) => return r.refuse(e),
        };
        r.gamma = g;
        r.eps0 = inp.gap0;
        r.sublinear_coeff = inp.gap0.map(|e0| 2.0 / g * e0);
        let Some(c) = inp.grad_bound else {
            r.residual = None;
            return r.refuse(missing("gradient bound C"));
        };
        r.residual = Some(2.0 * inp.beta * sigma * m * c * c);
        return r;
    }
    let mut r = TheoryReport::new(StepRule::QiagStrong, BoundMetric::Dist2);
    if !(mu > 0.0) {
        return r.refuse("not strongly convex (mu = 0)");
    }
    if !(th > 0.0) {
        return r.refuse("theta must be positive");
    }
    let bar = qiag_gamma_bar(inp);
    r.gamma_bound = bar;
    let g = match inp.strict_gamma(bar) {
        Ok(g) => g,
        Err(e) => return r.refuse(e),
    };
    r.gamma = g;
    let p = 1.0 - 2.0 * mu * g + g * g;
    let q = 2.0 * m * sigma * a * l * l * g * g * lb * lb * tau * tau + (1.0 + th) * g * g * m * a * sigma * l * l;
    r.block = 1 + 2 * inp.tau;
    r.eps0 = inp.dist0_sq;
    r = r.with_rate(p + q);
    if !r.applicable {
        return r;
    }
    r.residual = inp.grad_star_sq.map(|gs| {
        let e = (2.0 * m * a * g * g * lb * lb * tau * tau + (1.0 + 1.0 / th) * g * g * sigma * a) * gs;
        e / (1.0 - p - q)
    });
    r
}

/// Dispatches on `rule`.
pub fn evaluate(rule: StepRule, inp: &TheoryInputs) -> TheoryReport {
    match rule {
        StepRule::QgdStrong => thm_qgd_sc(inp),
        StepRule::QgdConvex => thm_qgd_cvx(inp),
        StepRule::CiagStrong => thm_ciag_sc(inp),
        StepRule::CiagConvex => thm_ciag_nsc(inp),
        StepRule::DqgdStrong => thm_dqgd(inp, false),
        StepRule::DqgdConvex => thm_dqgd(inp, true),
        StepRule::QiagStrong => thm_qiag(inp, false),
        StepRule::QiagBounded => thm_qiag(inp, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base() -> TheoryInputs {
        TheoryInputs {
            mu: 1.0,
            l: 3.0,
            l_bar: 9.0,
            m: 3,
            d: 1024,
            alpha: 1.0,
            beta: 0.0,
            c: 5.0,
            entry_bits: 3,
            sigma: 3.0,
            tau: 0,
            theta: 1.0,
            grad_bound: None,
            grad_star_sq: Some(0.0),
            dist0_sq: Some(1.0),
            gap0: Some(1.0),
            eps: None,
            gamma: None,
            gamma_scale: None,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15 * b.abs().max(1.0)
    }

    #[test]
    fn qgd_sc_substitution() {
        let r = thm_qgd_sc(&base());
        assert!(close(r.gamma, 0.2));
        assert!(close(r.rate_factor.unwrap(), 0.64));
        let r2 = thm_qgd_sc(&TheoryInputs { alpha: 2.0, ..base() });
        assert!(close(r2.gamma, 0.1));
        assert!(close(r2.rate_factor.unwrap(), 0.82));
        let flat = thm_qgd_sc(&TheoryInputs { mu: 0.0, ..base() });
        assert!(!flat.applicable);
    }

    #[test]
    fn qgd_cvx_substitution() {
        let inp = TheoryInputs {
            l_bar: 2.0,
            dist0_sq: Some(100.0),
            eps: Some(1.0),
            ..base()
        };
        let r = thm_qgd_cvx(&inp);
        assert!(close(r.k_star.unwrap(), 100.0));
        assert!(close(r.b_star.unwrap(), 6500.0));
        for a in [1.0, 2.0, 4.0] {
            let r = thm_qgd_cvx(&TheoryInputs { alpha: a, ..inp.clone() });
            assert!(close(r.k_star.unwrap(), 100.0 * a));
        }
    }

    #[test]
    fn ciag_nsc_gate_and_identity() {
        let r = thm_ciag_nsc(&TheoryInputs { l_bar: 4.0, ..base() });
        assert!(close(r.gamma_bound, 0.5));
        assert!(close(r.gamma, STRICT_SAFETY * 0.5));
        assert!(close(r.sublinear_coeff.unwrap(), 1.0 / (r.gamma / 2.0)));
        assert!(!thm_ciag_nsc(&TheoryInputs { beta: 0.25, ..base() }).applicable);
        assert!(thm_ciag_nsc(&TheoryInputs { beta: 0.2499, ..base() }).applicable);
    }

    #[test]
    fn ciag_sc_zero_tau_delegates() {
        let r = thm_ciag_sc(&base());
        assert_eq!(r.gamma, thm_qgd_sc(&base()).gamma);
        assert_eq!(r.rule, StepRule::CiagStrong);
    }

    #[test]
    fn ciag_sc_rejects_large_step() {
        let inp = TheoryInputs { tau: 2, ..base() };
        let bar = ciag_gamma_bar(&inp);
        assert!(!thm_ciag_sc(&TheoryInputs { gamma: Some(bar), ..inp.clone() }).applicable);
        assert!(thm_ciag_sc(&TheoryInputs { gamma: Some(0.5 * bar), ..inp }).applicable);
    }

    #[test]
    fn dqgd_examples() {
        let g1 = thm_dqgd(&base(), false).gamma;
        let g3 = thm_dqgd(&TheoryInputs { theta: 3.0, ..base() }, false).gamma;
        assert!(close(g3, g1 / 2.0));
        assert_eq!(thm_dqgd(&base(), false).residual, Some(0.0));
        let no_star = thm_dqgd(&TheoryInputs { grad_star_sq: None, ..base() }, false);
        assert_eq!(no_star.residual, None);
        let single = TheoryInputs {
            m: 1,
            sigma: 1.0,
            theta: 1e-12,
            ..base()
        };
        assert!((thm_dqgd(&single, false).gamma - 1.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn qiag_examples() {
        let inp = TheoryInputs {
            mu: 0.5,
            l: 1.0,
            l_bar: 1.5,
            tau: 2,
            sigma: 2.0,
            gamma_scale: Some(0.5),
            ..base()
        };
        let r = thm_qiag(&inp, false);
        assert!(r.applicable, "{:?}", r.reason);
        let (m, s, a, l, lb, t) = (3.0, 2.0, 1.0, 1.0, 1.5, 2.0);
        let expect = 1.0 - 0.25 / (1.0 + 2.0 * m * s * a * l * l * (lb * lb * t * t + 1.0));
        assert!((r.rate_factor.unwrap() - expect).abs() < 1e-15);
        let bounded = thm_qiag(&TheoryInputs { grad_bound: Some(2.0), ..base() }, true);
        assert_eq!(bounded.residual, Some(0.0));
        assert!(!thm_qiag(&base(), true).applicable);
    }

    #[test]
    fn rule_names_round_trip() {
        for r in StepRule::ALL {
            assert_eq!(StepRule::parse(r.name()), Some(r));
        }
    }
}
