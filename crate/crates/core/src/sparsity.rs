//! Conflict-graph degrees of worker supports and the derived sparsity
//! factors.
//!
//! Two workers conflict when their supports intersect. With `deg(i)` the
//! number of workers conflicting with `i`:
//!
//! * `delta_ave = mean(deg)`, `delta_max = max(deg)`
//! * `sigma = min(sqrt(m (1 + delta_ave)), 1 + delta_max)`
//!
//! `sigma` bounds `|sum v_i|^2 <= sigma * sum |v_i|^2` for any vectors with
//! those supports, and `L * sqrt(m (1 + min(delta_ave, delta_max)))` bounds
//! the gradient Lipschitz constant of the sum.

use serde::{Deserialize, Serialize};

use crate::data::WorkerShard;
use crate::par::Exec;
use crate::sparse::{sorted_intersects, SparseVec};

/// Above this many workers degrees are computed from an inverted index of
/// bitsets instead of pairwise merges.
const PAIRWISE_MAX_WORKERS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub m: usize,
    pub delta_ave: f64,
    pub delta_max: usize,
    pub delta: f64,
    pub sigma: f64,
}

impl SparsityReport {
    pub fn from_degrees(degrees: &[usize]) -> Self {
        let m = degrees.len();
        assert!(m >= 1, "need at least one worker");
        let delta_ave = degrees.iter().sum::<usize>() as f64 / m as f64;
        let delta_max = degrees.iter().copied().max().unwrap_or(0);
        SparsityReport {
            m,
            delta_ave,
            delta_max,
            delta: delta_ave.min(delta_max as f64),
            sigma: sigma_from(m, delta_ave, delta_max),
        }
    }

    pub fn sigma_over_m(&self) -> f64 {
        self.sigma / self.m as f64
    }
}

pub fn sigma_from(m: usize, delta_ave: f64, delta_max: usize) -> f64 {
    (m as f64 * (1.0 + delta_ave))
        .sqrt()
        .min(1.0 + delta_max as f64)
}

/// Which supports the static sparsity measures are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsitySource {
    /// Union of each shard's row supports.
    #[default]
    Data,
    /// Supports of the actual component gradients: dense whenever the
    /// regularizer is active.
    Gradient,
}

/// Per-worker supports under `source`.
pub fn worker_supports(shards: &[WorkerShard], source: SparsitySource, reg_sigma: f64) -> Vec<Vec<usize>> {
    shards
        .iter()
        .map(|s| match source {
            SparsitySource::Gradient if reg_sigma > 0.0 => (0..s.dim).collect(),
            _ => s.support.clone(),
        })
        .collect()
}

/// Conflict degree of each worker.
pub fn degrees<S: AsRef<[usize]> + Sync>(supports: &[S], exec: Exec) -> Vec<usize> {
    let m = supports.len();
    if m <= PAIRWISE_MAX_WORKERS {
        return exec.map(m, |i| {
            (0..m)
                .filter(|&j| j != i && sorted_intersects(supports[i].as_ref(), supports[j].as_ref()))
                .count()
        });
    }
    // Inverted index: for each feature, a bitset of the workers touching it.
    let words = m.div_ceil(64);
    let dim = supports
        .iter()
        .filter_map(|s| s.as_ref().last())
        .max()
        .map_or(0, |&x| x + 1);
    let mut slot = vec![usize::MAX; dim];
    let mut feature_sets: Vec<Vec<u64>> = Vec::new();
    for (w, s) in supports.iter().enumerate() {
        for &f in s.as_ref() {
            if slot[f] == usize::MAX {
                slot[f] = feature_sets.len();
                feature_sets.push(vec![0u64; words]);
            }
            feature_sets[slot[f]][w / 64] |= 1 << (w % 64);
        }
    }
    exec.map(m, |i| {
        let mut acc = vec![0u64; words];
        for &f in supports[i].as_ref() {
            for (a, b) in acc.iter_mut().zip(&feature_sets[slot[f]]) {
                *a |= b;
            }
        }
        acc[i / 64] &= !(1 << (i % 64));
        acc.iter().map(|w| w.count_ones() as usize).sum()
    })
}

/// Degrees and sparsity factor of a list of supports.
pub fn conflict_degrees<S: AsRef<[usize]> + Sync>(supports: &[S]) -> SparsityReport {
    SparsityReport::from_degrees(&degrees(supports, Exec::default()))
}

/// Sparsity factor of a set of realized messages (one per worker).
pub fn sigma_realized(payloads: &[&SparseVec]) -> f64 {
    let supports: Vec<&[usize]> = payloads.iter().map(|p| p.indices()).collect();
    SparsityReport::from_degrees(&degrees(&supports, Exec::Sequential)).sigma
}

/// `(|sum v_i|^2, sum |v_i|^2)` for the aggregation bound check.
pub fn aggregation_norms(payloads: &[&SparseVec]) -> (f64, f64) {
    let Some(first) = payloads.first() else {
        return (0.0, 0.0);
    };
    let mut sum = vec![0.0; first.dim()];
    let mut sq = 0.0;
    for p in payloads {
        p.axpy_into(1.0, &mut sum);
        sq += p.norm_sq();
    }
    (crate::sparse::norm_sq(&sum), sq)
}

/// Aggregate Lipschitz bound `L * sqrt(m (1 + delta))`.
pub fn lipschitz_bar(l: f64, m: usize, delta: f64) -> f64 {
    l * (m as f64 * (1.0 + delta)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example() {
        let r = conflict_degrees(&[vec![1, 2], vec![2, 3], vec![4]]);
        assert_eq!(r.delta_max, 1);
        assert!((r.delta_ave - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.sigma, 2.0);
        assert_eq!(r.delta, 2.0 / 3.0);
    }

    #[test]
    fn disjoint_and_complete() {
        let r = conflict_degrees(&[vec![0], vec![1], vec![2, 3]]);
        assert_eq!((r.delta_ave, r.delta_max, r.sigma), (0.0, 0, 1.0));
        let same = vec![vec![0, 5, 9]; 4];
        let r = conflict_degrees(&same);
        assert_eq!((r.delta_ave, r.delta_max, r.sigma), (3.0, 3, 4.0));
    }

    #[test]
    fn realized_sigma() {
        let d = 6;
        let p = [
            SparseVec::new(d, vec![1, 2], vec![1.0, 1.0]).unwrap(),
            SparseVec::new(d, vec![2, 3], vec![1.0, -1.0]).unwrap(),
            SparseVec::new(d, vec![4], vec![2.0]).unwrap(),
        ];
        let refs: Vec<&SparseVec> = p.iter().collect();
        assert_eq!(sigma_realized(&refs), 2.0);
        let z = [SparseVec::zeros(d), SparseVec::zeros(d)];
        let refs: Vec<&SparseVec> = z.iter().collect();
        assert_eq!(sigma_realized(&refs), 1.0);
    }

    #[test]
    fn lipschitz_bar_values() {
        assert!((lipschitz_bar(2.0, 4, 1.0) - 2.0 * 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(lipschitz_bar(1.5, 4, 3.0), 6.0);
        assert_eq!(lipschitz_bar(3.0, 1, 0.0), 3.0);
    }

    #[test]
    fn bitset_path_matches_pairwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let supports: Vec<Vec<usize>> = (0..150)
            .map(|_| {
                let mut s: Vec<usize> = (0..3).map(|_| rng.random_range(0..400)).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let fast = degrees(&supports, Exec::Sequential);
        let slow: Vec<usize> = (0..supports.len())
            .map(|i| {
                (0..supports.len())
                    .filter(|&j| j != i && sorted_intersects(&supports[i], &supports[j]))
                    .count()
            })
            .collect();
        assert_eq!(fast, slow);
        assert_eq!(fast, degrees(&supports, Exec::Parallel));
    }
}
