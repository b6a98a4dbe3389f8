#![allow(dead_code)]

use compgrad::data::{normalize_rows, shard, Dataset, Sample};
use compgrad::loss::{CurvatureOptions, LossConfig, Problem};
use compgrad::sparse::SparseVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Column `j` is scaled by `decay^(j / (d - 1))` before row normalization.
    pub decay: f64,
    /// Labels are `a . x_true + noise * N(0, 1)`.
    pub noise: f64,
    pub reg_sigma: f64,
    pub seed: u64,
}

impl Instance {
    pub fn dataset(&self) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let x_true: Vec<f64> = (0..self.d).map(|_| rng.sample(StandardNormal)).collect();
        let scale = |j: usize| self.decay.powf(j as f64 / (self.d.max(2) - 1) as f64);
        let rows: Vec<Vec<f64>> = (0..self.n)
            .map(|_| {
                let a: Vec<f64> = (0..self.d)
                    .map(|j| scale(j) * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                a.iter().map(|v| v / norm).collect()
            })
            .collect();
        let samples = rows
            .into_iter()
            .map(|a| {
                let clean: f64 = a.iter().zip(&x_true).map(|(p, q)| p * q).sum();
                let noise: f64 = rng.sample(StandardNormal);
                Sample {
                    features: SparseVec::from_dense(&a),
                    label: clean + self.noise * noise,
                }
            })
            .collect();
        Dataset::new("gauss", self.d, samples).unwrap()
    }

    pub fn problem(&self) -> Problem {
        let ds = self.dataset();
        Problem::new(
            shard(&ds, self.m).unwrap(),
            LossConfig::new(self.n as f64, self.reg_sigma).unwrap(),
            &CurvatureOptions::default(),
        )
        .unwrap()
    }
}

/// Strongly convex dense instance used by the rate checks.
pub fn rate_instance() -> Instance {
    Instance {
        n: 600,
        d: 20,
        m: 3,
        decay: 0.3,
        noise: 0.1,
        reg_sigma: 0.0,
        seed: 2024,
    }
}

/// Sparse instance with `nnz` nonzeros per row, normalized rows.
pub fn sparse_problem(n: usize, d: usize, nnz: usize, m: usize, reg_sigma: f64, seed: u64, opts: &CurvatureOptions) -> Problem {
    let ds = normalize_rows(&compgrad::data::gen_sparse(n, d, nnz, seed));
    Problem::new(shard(&ds, m).unwrap(), LossConfig::new(n as f64, reg_sigma).unwrap(), opts).unwrap()
}

/// Dense copies of each shard: `(A_i, b_i)`.
pub fn dense_shards(p: &Problem) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
    p.shards
        .iter()
        .map(|s| {
            let a = s.rows.iter().map(|r| r.features.to_dense()).collect();
            let b = s.rows.iter().map(|r| r.label).collect();
            (a, b)
        })
        .collect()
}

/// `A_i^T (A_i x - b_i) / rho + sigma x`, from dense rows.
pub fn dense_component_grad(a: &[Vec<f64>], b: &[f64], rho: f64, sigma: f64, x: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = x.iter().map(|v| sigma * v).collect();
    for (row, bi) in a.iter().zip(b) {
        let r: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - bi;
        for (gj, aj) in g.iter_mut().zip(row) {
            *gj += aj * r / rho;
        }
    }
    g
}

/// Iterates `x_0 .. x_iters` of exact gradient descent.
pub fn plain_gd(p: &Problem, gamma: f64, x0: &[f64], iters: usize) -> Vec<Vec<f64>> {
    let shards = dense_shards(p);
    let (rho, sigma) = (p.loss.reg_rho, p.loss.reg_sigma);
    let mut x = x0.to_vec();
    let mut out = vec![x.clone()];
    for _ in 0..iters {
        let mut g = vec![0.0; x.len()];
        for (a, b) in &shards {
            for (gj, v) in g.iter_mut().zip(dense_component_grad(a, b, rho, sigma, &x)) {
                *gj += v;
            }
        }
        for (xj, gj) in x.iter_mut().zip(&g) {
            *xj -= gamma * gj;
        }
        out.push(x.clone());
    }
    out
}

/// Iterates of the incremental aggregated gradient method where worker
/// `k mod m` refreshes its gradient at iteration `k` (all at `k = 0`).
pub fn plain_iag_round_robin(p: &Problem, gamma: f64, x0: &[f64], iters: usize) -> Vec<Vec<f64>> {
    let shards = dense_shards(p);
    let m = shards.len();
    let (rho, sigma) = (p.loss.reg_rho, p.loss.reg_sigma);
    let mut x = x0.to_vec();
    let mut table: Vec<Vec<f64>> = shards
        .iter()
        .map(|(a, b)| dense_component_grad(a, b, rho, sigma, &x))
        .collect();
    let mut out = vec![x.clone()];
    for k in 0..iters {
        if k > 0 {
            let (a, b) = &shards[k % m];
            table[k % m] = dense_component_grad(a, b, rho, sigma, &x);
        }
        let mut g = vec![0.0; x.len()];
        for t in &table {
            for (gj, v) in g.iter_mut().zip(t) {
                *gj += v;
            }
        }
        for (xj, gj) in x.iter_mut().zip(&g) {
            *xj -= gamma * gj;
        }
        out.push(x.clone());
    }
    out
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let den = b.iter().map(|q| q * q).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
