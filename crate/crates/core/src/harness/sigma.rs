//! Realized sparsity of quantized worker messages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{full_grad, grad_component, LossConfig, Problem};
use crate::par::Exec;
use crate::quantizers::QuantizerSpec;
use crate::rng::{stream, Purpose};
use crate::sparse::SparseVec;
use crate::sparsity::{sigma_realized, SparsityReport, SparsitySource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTableSpec {
    pub quantizers: Vec<QuantizerSpec>,
    /// Monte Carlo draws per sampled iterate.
    pub draws: usize,
    /// Number of iterates sampled from the reference trajectory.
    pub iterates: usize,
    /// Length of the reference trajectory.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for SigmaTableSpec {
    fn default() -> Self {
        SigmaTableSpec {
            quantizers: vec![
                QuantizerSpec::sparsifier(0.5),
                QuantizerSpec::Ternary,
                QuantizerSpec::low_precision(4),
            ],
            draws: 100,
            iterates: 10,
            horizon: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub quantizer: String,
    /// Static factor from the supports, over `m`.
    pub sigma_over_m: f64,
    /// Mean realized factor over `m`.
    pub mean_sigma_k_over_m: f64,
    pub std_err: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTable {
    pub m: usize,
    pub source: SparsitySource,
    pub sparsity: SparsityReport,
    pub rows: Vec<SigmaRow>,
}

/// Iterates `x_0, ..., x_horizon` of exact gradient descent with step
/// `1 / L_bar` from the origin.
pub fn reference_trajectory(problem: &Problem, horizon: usize) -> Vec<Vec<f64>> {
    let gamma = 1.0 / problem.curvature.l_bar;
    let mut x = vec![0.0; problem.dim];
    let mut out = vec![x.clone()];
    for _ in 0..horizon {
        let g = full_grad(&problem.shards, &problem.loss, &x);
        for (xi, gi) in x.iter_mut().zip(g) {
            *xi -= gamma * gi;
        }
        out.push(x.clone());
    }
    out
}

/// Per-worker vectors whose quantized supports are measured: the data-term
/// gradient for [`SparsitySource::Data`], the full component gradient for
/// [`SparsitySource::Gradient`].
pub fn worker_vectors(problem: &Problem, source: SparsitySource, x: &[f64]) -> Vec<SparseVec> {
    let cfg = match source {
        SparsitySource::Data => LossConfig {
            reg_sigma: 0.0,
            ..problem.loss
        },
        SparsitySource::Gradient => problem.loss,
    };
    problem
        .shards
        .iter()
        .map(|s| SparseVec::from_dense(&grad_component(s, &cfg, x)))
        .collect()
}

/// Static `sigma / m` and Monte Carlo `E sigma_k / m` per quantizer.
pub fn table_sigma(problem: &Problem, source: SparsitySource, spec: &SigmaTableSpec, exec: Exec) -> Result<SigmaTable> {
    if spec.draws == 0 || spec.iterates == 0 {
        return Err(Error::Config("sigma table needs draws >= 1 and iterates >= 1".into()));
    }
    let m = problem.m();
    let traj = reference_trajectory(problem, spec.horizon);
    let picks: Vec<Vec<SparseVec>> = (0..spec.iterates)
        .map(|j| {
            let t = j * spec.horizon / spec.iterates;
            worker_vectors(problem, source, &traj[t])
        })
        .collect();
    let sparsity = problem.curvature.sparsity;
    let mut rows = Vec::new();
    for q in &spec.quantizers {
        q.validate(problem.dim)?;
        let n = spec.iterates * spec.draws;
        let vals = exec.map(n, |s| {
            let vecs = &picks[s / spec.draws];
            let msgs: Vec<SparseVec> = vecs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    q.compress(v, &mut stream(spec.seed, Purpose::Probe, s as u64, i as u64))
                        .payload
                })
                .collect();
            let refs: Vec<&SparseVec> = msgs.iter().collect();
            sigma_realized(&refs) / m as f64
        });
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        rows.push(SigmaRow {
            quantizer: q.label(),
            sigma_over_m: sparsity.sigma_over_m(),
            mean_sigma_k_over_m: mean,
            std_err: (var / n as f64).sqrt(),
            samples: n,
        });
    }
    Ok(SigmaTable {
        m,
        source,
        sparsity,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_dense, normalize_rows, shard};
    use crate::loss::CurvatureOptions;

    #[test]
    fn dense_data_is_fully_conflicting() {
        let ds = normalize_rows(&gen_dense(60, 8, 3));
        let p = Problem::new(
            shard(&ds, 3).unwrap(),
            LossConfig::new(60.0, 1.0).unwrap(),
            &CurvatureOptions::default(),
        )
        .unwrap();
        let spec = SigmaTableSpec {
            quantizers: vec![QuantizerSpec::Identity],
            draws: 2,
            iterates: 2,
            horizon: 4,
            seed: 1,
        };
        let t = table_sigma(&p, SparsitySource::Data, &spec, Exec::Sequential).unwrap();
        assert_eq!(t.rows[0].sigma_over_m, 1.0);
        assert_eq!(t.rows[0].mean_sigma_k_over_m, 1.0);
        assert_eq!(t.rows[0].std_err, 0.0);
    }
}
