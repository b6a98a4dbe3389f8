mod common;

use common::*;
use compgrad::loss::{full_grad, grad_component, value, value_component, CurvatureOptions, Problem};
use compgrad::sparse::{dist_sq, dot};
use compgrad::sparsity::SparsitySource;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Small instances: dense with and without regularization, sparse under
/// both sparsity sources.
fn problems() -> Vec<Problem> {
    let gradient = CurvatureOptions {
        sparsity_source: SparsitySource::Gradient,
        ..CurvatureOptions::default()
    };
    vec![
        rate_instance().problem(),
        Instance {
            n: 80,
            d: 12,
            m: 4,
            decay: 0.5,
            noise: 0.3,
            reg_sigma: 0.1,
            seed: 5,
        }
        .problem(),
        sparse_problem(90, 30, 3, 5, 0.0, 6, &CurvatureOptions::default()),
        sparse_problem(90, 30, 3, 5, 0.05, 7, &gradient),
    ]
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in problems() {
        for shard in &p.shards {
            for _ in 0..5 {
                let x = gaussian(&mut rng, p.dim, 2.0);
                let g = grad_component(shard, &p.loss, &x);
                let mut fd = vec![0.0; p.dim];
                for j in 0..p.dim {
                    let h = 1e-5 * (1.0 + x[j].abs());
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    fd[j] = (value_component(shard, &p.loss, &xp) - value_component(shard, &p.loss, &xm)) / (2.0 * h);
                }
                let err = rel_diff(&g, &fd);
                assert!(err <= 1e-6, "relative error {err:.2e}");
            }
        }
    }
}

#[test]
fn component_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pairs = 0;
    for p in problems() {
        let l = p.curvature.l_component;
        for _ in 0..250 {
            let x = gaussian(&mut rng, p.dim, 1.0);
            let y = gaussian(&mut rng, p.dim, 1.0);
            let r2 = dist_sq(&x, &y);
            for shard in &p.shards {
                let fx = value_component(shard, &p.loss, &x);
                let fy = value_component(shard, &p.loss, &y);
                let g = grad_component(shard, &p.loss, &x);
                let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
                let lin = fx + dot(&g, &diff);
                let slack = 1e-12 * (fx.abs() + fy.abs() + 1.0);
                assert!(fy >= lin - slack, "convexity: {fy} < {lin}");
                assert!(fy <= lin + 0.5 * l * r2 * (1.0 + 1e-9) + slack, "smoothness violated");
            }
            pairs += 1;
        }
    }
    assert_eq!(pairs, 1000);
}

#[test]
fn strong_convexity_with_certified_mu() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in problems() {
        let mu = p.curvature.mu;
        if mu == 0.0 {
            continue;
        }
        for _ in 0..200 {
            let x = gaussian(&mut rng, p.dim, 1.0);
            let y = gaussian(&mut rng, p.dim, 1.0);
            let fx = value(&p.shards, &p.loss, &x);
            let fy = value(&p.shards, &p.loss, &y);
            let g = full_grad(&p.shards, &p.loss, &x);
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let lower = fx + dot(&g, &diff) + 0.5 * mu * dist_sq(&x, &y);
            assert!(fy >= lower - 1e-12 * (fx.abs() + fy.abs() + 1.0), "strong convexity: {fy} < {lower}");
        }
    }
}

#[test]
fn aggregate_gradient_is_l_bar_lipschitz() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in problems() {
        let lb = p.curvature.l_bar;
        for _ in 0..200 {
            let x = gaussian(&mut rng, p.dim, 1.0);
            let y = gaussian(&mut rng, p.dim, 1.0);
            let gx = full_grad(&p.shards, &p.loss, &x);
            let gy = full_grad(&p.shards, &p.loss, &y);
            let lhs = dist_sq(&gx, &gy).sqrt();
            let rhs = lb * dist_sq(&x, &y).sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
        }
    }
}

#[test]
fn reference_solution_is_stationary() {
    for p in problems() {
        let g0 = full_grad(&p.shards, &p.loss, &vec![0.0; p.dim]);
        let g = full_grad(&p.shards, &p.loss, &p.x_star);
        let n0 = dot(&g0, &g0).sqrt();
        assert!(dot(&g, &g).sqrt() <= 10.0 * 1e-12 * n0.max(1e-300), "gradient at x* too large");
        assert!(p.curvature.l_bar <= p.m() as f64 * p.curvature.l_component * (1.0 + 1e-12));
    }
}
