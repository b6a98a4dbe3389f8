//! Bounded staleness models for the asynchronous iterations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    /// Every worker reports at every iteration.
    Zero,
    /// Worker `i` reports at iterations `k = i mod m` (round robin).
    Cyclic,
    /// Uniform staleness in `[0, min(tau, k)]`, keyed by `(seed, k, i)`.
    RandomBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelaySchedule {
    pub kind: DelayKind,
    pub tau: usize,
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DelaySchedule {
    pub fn zero(m: usize) -> Self {
        DelaySchedule {
            kind: DelayKind::Zero,
            tau: 0,
            m,
            seed: 0,
        }
    }

    pub fn cyclic(m: usize, tau: usize) -> Self {
        DelaySchedule {
            kind: DelayKind::Cyclic,
            tau,
            m,
            seed: 0,
        }
    }

    pub fn random_bounded(m: usize, tau: usize, seed: u64) -> Self {
        DelaySchedule {
            kind: DelayKind::RandomBounded,
            tau,
            m,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("delay schedule needs m >= 1".into()));
        }
        if self.kind == DelayKind::Cyclic && self.tau + 1 < self.m {
            return Err(Error::Config(format!(
                "cyclic delays reach staleness {} but tau = {}",
                self.m - 1,
                self.tau
            )));
        }
        Ok(())
    }

    /// Largest staleness this schedule can produce.
    pub fn bound(&self) -> usize {
        match self.kind {
            DelayKind::Zero => 0,
            _ => self.tau,
        }
    }

    /// Age of worker `i`'s gradient used at iteration `k`.
    pub fn staleness(&self, k: usize, i: usize) -> usize {
        debug_assert!(i < self.m);
        match self.kind {
            DelayKind::Zero => 0,
            // last k' <= k with k' = i (mod m); none yet means the x_0 gradient
            DelayKind::Cyclic => {
                if k >= i {
                    (k - i) % self.m
                } else {
                    k
                }
            }
            DelayKind::RandomBounded => {
                let hi = self.tau.min(k);
                if hi == 0 {
                    0
                } else {
                    stream(self.seed, Purpose::Delay, k as u64, i as u64).random_range(0..=hi)
                }
            }
        }
    }
}
