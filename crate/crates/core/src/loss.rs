//! Regularized least squares split across workers:
//! `f_i(x) = |A_i x - b_i|^2 / (2 rho) + (sigma / 2) |x|^2`, `f = sum_i f_i`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::WorkerShard;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sparse::{dist_sq, dot, norm_sq};
use crate::sparsity::{conflict_degrees, lipschitz_bar, worker_supports, SparsityReport, SparsitySource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Denominator of the data term.
    pub reg_rho: f64,
    /// Weight of the l2 term in each component.
    pub reg_sigma: f64,
}

impl LossConfig {
    pub fn new(reg_rho: f64, reg_sigma: f64) -> Result<Self> {
        if !(reg_rho > 0.0) || !(reg_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "loss needs rho > 0 and sigma >= 0 (got rho = {reg_rho}, sigma = {reg_sigma})"
            )));
        }
        Ok(LossConfig { reg_rho, reg_sigma })
    }
}

/// `A_i x - b_i` for every row of the shard.
fn residuals(shard: &WorkerShard, x: &[f64]) -> Vec<f64> {
    shard
        .rows
        .iter()
        .map(|r| r.features.dot_dense(x) - r.label)
        .collect()
}

/// Value and gradient of `f_i` at `x`.
pub fn component_value_and_grad(shard: &WorkerShard, cfg: &LossConfig, x: &[f64]) -> (f64, Vec<f64>) {
    let res = residuals(shard, x);
    let mut g: Vec<f64> = x.iter().map(|xi| cfg.reg_sigma * xi).collect();
    let inv_rho = 1.0 / cfg.reg_rho;
    for (row, r) in shard.rows.iter().zip(&res) {
        row.features.axpy_into(r * inv_rho, &mut g);
    }
    let value = norm_sq(&res) * 0.5 * inv_rho + 0.5 * cfg.reg_sigma * norm_sq(x);
    (value, g)
}

pub fn grad_component(shard: &WorkerShard, cfg: &LossConfig, x: &[f64]) -> Vec<f64> {
    component_value_and_grad(shard, cfg, x).1
}

pub fn value_component(shard: &WorkerShard, cfg: &LossConfig, x: &[f64]) -> f64 {
    let res = residuals(shard, x);
    norm_sq(&res) * 0.5 / cfg.reg_rho + 0.5 * cfg.reg_sigma * norm_sq(x)
}

/// `f(x)`, summed in worker order.
pub fn value(shards: &[WorkerShard], cfg: &LossConfig, x: &[f64]) -> f64 {
    shards.iter().map(|s| value_component(s, cfg, x)).sum()
}

/// `f(x)` and `grad f(x)`, summed in worker order.
pub fn value_and_grad(shards: &[WorkerShard], cfg: &LossConfig, x: &[f64]) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut g = vec![0.0; x.len()];
    for s in shards {
        let (v, gi) = component_value_and_grad(s, cfg, x);
        total += v;
        for (a, b) in g.iter_mut().zip(&gi) {
            *a += b;
        }
    }
    (total, g)
}

pub fn full_grad(shards: &[WorkerShard], cfg: &LossConfig, x: &[f64]) -> Vec<f64> {
    value_and_grad(shards, cfg, x).1
}

/// `sum_i |grad f_i(x)|^2`.
pub fn component_grad_norms_sq(shards: &[WorkerShard], cfg: &LossConfig, x: &[f64]) -> f64 {
    shards.iter().map(|s| norm_sq(&grad_component(s, cfg, x))).sum()
}

/// `A_i^T A_i v`.
fn gram_apply(shard: &WorkerShard, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for row in &shard.rows {
        row.features.axpy_into(row.features.dot_dense(v), &mut out);
    }
    out
}

/// Largest eigenvalue of a PSD operator by power iteration.
pub fn power_iteration(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>, tol: f64, max_iters: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, Purpose::Probe, 0, 0);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 0.5).collect();
    let n = norm_sq(&v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = apply(&v);
        let next = dot(&v, &w);
        let wn = norm_sq(&w).sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if (next - lambda).abs() <= tol * next.abs() {
            return next.max(lambda);
        }
        lambda = next;
    }
    lambda
}

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureOptions {
    /// Compute `lambda_min(A^T A)` exactly when `d` is at most this.
    pub exact_min_eig_max_dim: usize,
    pub sparsity_source: SparsitySource,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions {
            exact_min_eig_max_dim: 64,
            sparsity_source: SparsitySource::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Max over workers of the Lipschitz constant of `grad f_i`.
    pub l_component: f64,
    /// Aggregate bound `l_component * sqrt(m (1 + delta))`.
    pub l_bar: f64,
    /// Certified strong-convexity modulus of `f`; zero if none is known.
    pub mu: f64,
    /// Empirical bound on `max_i |grad f_i|` over a probe set.
    pub c_estimate: Option<f64>,
    pub sparsity: SparsityReport,
}

impl CurvatureReport {
    pub fn strongly_convex(&self) -> bool {
        self.mu > 0.0
    }
}

pub fn curvature(shards: &[WorkerShard], cfg: &LossConfig, opts: &CurvatureOptions) -> CurvatureReport {
    let m = shards.len();
    let dim = shards[0].dim;
    let l_data = shards
        .iter()
        .map(|s| power_iteration(dim, |v| gram_apply(s, v), POWER_TOL, POWER_MAX_ITERS, s.worker_id as u64))
        .fold(0.0, f64::max);
    let l_component = l_data / cfg.reg_rho + cfg.reg_sigma;
    let supports = worker_supports(shards, opts.sparsity_source, cfg.reg_sigma);
    let sparsity = conflict_degrees(&supports);
    let l_bar = lipschitz_bar(l_component, m, sparsity.delta);
    let mut mu = m as f64 * cfg.reg_sigma;
    if dim <= opts.exact_min_eig_max_dim {
        mu += min_gram_eigenvalue(shards, dim) / cfg.reg_rho;
    }
    CurvatureReport {
        l_component,
        l_bar,
        mu,
        c_estimate: None,
        sparsity,
    }
}

/// Certified lower bound on `lambda_min(A^T A)` from a dense eigensolve.
fn min_gram_eigenvalue(shards: &[WorkerShard], dim: usize) -> f64 {
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    for row in shards.iter().flat_map(|s| &s.rows) {
        for (i, a) in row.features.iter() {
            for (j, b) in row.features.iter() {
                g[(i, j)] += a * b;
            }
        }
    }
    let eig = SymmetricEigen::new(g).eigenvalues;
    let max = eig.iter().copied().fold(0.0, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    // Leave room for eigensolver rounding so the result stays a lower bound.
    (min - 1e-12 * max.max(1.0)).max(0.0)
}

/// Largest `max_i |grad f_i(x)|` over the probe iterates.
pub fn estimate_gradient_bound(shards: &[WorkerShard], cfg: &LossConfig, probes: &[Vec<f64>]) -> f64 {
    probes
        .iter()
        .flat_map(|x| shards.iter().map(move |s| norm_sq(&grad_component(s, cfg, x)).sqrt()))
        .fold(0.0, f64::max)
}

/// Solves `grad f(x) = 0`, i.e. `(A^T A / rho + m sigma I) x = A^T b / rho`,
/// by conjugate gradients to relative residual `tol`.
pub fn solve_reference(shards: &[WorkerShard], cfg: &LossConfig, tol: f64) -> Result<Vec<f64>> {
    let dim = shards[0].dim;
    let m = shards.len() as f64;
    let apply = |v: &[f64]| {
        let mut out: Vec<f64> = v.iter().map(|x| m * cfg.reg_sigma * x).collect();
        for s in shards {
            for (o, g) in out.iter_mut().zip(gram_apply(s, v)) {
                *o += g / cfg.reg_rho;
            }
        }
        out
    };
    let mut rhs = vec![0.0; dim];
    for row in shards.iter().flat_map(|s| &s.rows) {
        row.features.axpy_into(row.label / cfg.reg_rho, &mut rhs);
    }
    let rhs_norm = norm_sq(&rhs).sqrt();
    let mut x = vec![0.0; dim];
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let max_iters = 20 * dim + 1000;
    let mut iters = 0;
    // Restart from the true residual when the recursive one drifts.
    for _restart in 0..8 {
        let ax = apply(&x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rel = norm_sq(&r).sqrt() / rhs_norm;
        if rel <= tol {
            return Ok(x);
        }
        let mut p = r.clone();
        let mut rr = norm_sq(&r);
        while iters < max_iters {
            iters += 1;
            let ap = apply(&p);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let step = rr / pap;
            for i in 0..dim {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            let rr_next = norm_sq(&r);
            if rr_next.sqrt() <= 0.5 * tol * rhs_norm {
                break;
            }
            let beta = rr_next / rr;
            for i in 0..dim {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_next;
        }
        if iters >= max_iters {
            break;
        }
    }
    let ax = apply(&x);
    let true_rel = dist_sq(&rhs, &ax).sqrt() / rhs_norm;
    if true_rel <= tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            iters,
            residual: true_rel,
        })
    }
}

/// A sharded problem with its reference solution and curvature constants.
#[derive(Debug, Clone)]
pub struct Problem {
    pub shards: Vec<WorkerShard>,
    pub loss: LossConfig,
    pub dim: usize,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// `sum_i |grad f_i(x*)|^2`
    pub grad_star_sq: f64,
    pub curvature: CurvatureReport,
}

pub const REFERENCE_TOL: f64 = 1e-12;

impl Problem {
    pub fn new(shards: Vec<WorkerShard>, loss: LossConfig, opts: &CurvatureOptions) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::Config("problem needs at least one shard".into()));
        }
        let dim = shards[0].dim;
        let x_star = solve_reference(&shards, &loss, REFERENCE_TOL)?;
        let f_star = value(&shards, &loss, &x_star);
        let grad_star_sq = component_grad_norms_sq(&shards, &loss, &x_star);
        let curvature = curvature(&shards, &loss, opts);
        Ok(Problem {
            shards,
            loss,
            dim,
            x_star,
            f_star,
            grad_star_sq,
            curvature,
        })
    }

    pub fn m(&self) -> usize {
        self.shards.len()
    }
}
