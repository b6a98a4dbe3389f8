//! Unbiased random quantizers: gradient sparsifier, ternary quantizer and
//! low-precision quantizer, with their moment bounds and bit costs.
//!
//! Every randomized quantizer here acts coordinate-wise: each nonzero
//! coordinate `v_i` is mapped to one of two values, `low` or `high`, with
//! `P(high) = p_high` chosen so that the expectation is exactly `v_i`. The
//! per-coordinate laws are exposed through [`QuantizerSpec::coordinate_laws`]
//! so they can be enumerated in tests.

pub mod wire;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVec;

/// Bits used for a full-precision real.
pub const FLOAT_BITS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantizerSpec {
    Identity,
    /// Keep coordinate `i` with probability `p[i]`, rescaled by `1/p[i]`.
    Sparsifier { probs: Probabilities },
    Ternary,
    LowPrecision { levels: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probabilities {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl Probabilities {
    fn get(&self, i: usize) -> f64 {
        match self {
            Probabilities::Uniform(p) => *p,
            Probabilities::PerCoordinate(ps) => ps[i],
        }
    }
}

/// Two-point law of one output coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateLaw {
    pub low: f64,
    pub high: f64,
    pub p_high: f64,
}

impl CoordinateLaw {
    pub fn mean(&self) -> f64 {
        self.p_high * self.high + (1.0 - self.p_high) * self.low
    }
}

/// Moment and sparsity bounds of a quantizer in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrqBounds {
    /// `E|Q(v)|^2 <= alpha |v|^2`
    pub alpha: f64,
    /// `E|Q(v) - v|^2 <= beta |v|^2`
    pub beta: f64,
    /// `E nnz(Q(v)) <= c`
    pub c: f64,
}

/// One compressed vector plus its wire cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedMsg {
    pub payload: SparseVec,
    pub nnz: usize,
    pub bits: u64,
    pub carries_norm: bool,
    /// Norm of the input vector; transmitted only when `carries_norm`.
    pub norm: f64,
}

pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

impl QuantizerSpec {
    pub fn sparsifier(p: f64) -> Self {
        QuantizerSpec::Sparsifier {
            probs: Probabilities::Uniform(p),
        }
    }

    pub fn sparsifier_per_coordinate(p: Vec<f64>) -> Self {
        QuantizerSpec::Sparsifier {
            probs: Probabilities::PerCoordinate(p),
        }
    }

    pub fn low_precision(levels: u32) -> Self {
        QuantizerSpec::LowPrecision { levels }
    }

    /// Short label used in file names and plots.
    pub fn label(&self) -> String {
        match self {
            QuantizerSpec::Identity => "identity".into(),
            QuantizerSpec::Sparsifier {
                probs: Probabilities::Uniform(p),
            } => format!("gs{p}"),
            QuantizerSpec::Sparsifier { .. } => "gs".into(),
            QuantizerSpec::Ternary => "tq".into(),
            QuantizerSpec::LowPrecision { levels } => format!("lp{levels}"),
        }
    }

    /// Checks parameters against dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let check_p = |p: f64| {
            if p > 0.0 && p <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "sparsifier probability {p} outside (0, 1]"
                )))
            }
        };
        match self {
            QuantizerSpec::Sparsifier { probs } => match probs {
                Probabilities::Uniform(p) => check_p(*p),
                Probabilities::PerCoordinate(ps) => {
                    if ps.len() != d {
                        return Err(Error::Config(format!(
                            "{} sparsifier probabilities for dimension {d}",
                            ps.len()
                        )));
                    }
                    ps.iter().try_for_each(|p| check_p(*p))
                }
            },
            QuantizerSpec::LowPrecision { levels } if *levels == 0 => {
                Err(Error::Config("low-precision quantizer needs s >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Bits per transmitted entry, excluding the index.
    pub fn entry_bits(&self) -> u64 {
        match self {
            QuantizerSpec::Identity | QuantizerSpec::Sparsifier { .. } => FLOAT_BITS,
            QuantizerSpec::Ternary => 1,
            QuantizerSpec::LowPrecision { levels } => 1 + ceil_log2(*levels as u64),
        }
    }

    /// Whether messages carry the input norm as one extra float.
    pub fn carries_norm(&self) -> bool {
        matches!(
            self,
            QuantizerSpec::Ternary | QuantizerSpec::LowPrecision { .. }
        )
    }

    /// Wire cost of a message with `nnz` entries in dimension `d`.
    pub fn message_bits(&self, nnz: usize, d: usize) -> u64 {
        let per_entry = ceil_log2(d as u64) + self.entry_bits();
        let surcharge = if self.carries_norm() { FLOAT_BITS } else { 0 };
        nnz as u64 * per_entry + surcharge
    }

    /// Second-moment, error-variance and nnz bounds in dimension `d`.
    pub fn bounds(&self, d: usize) -> UrqBounds {
        let df = d as f64;
        let low_precision = |s: f64| {
            let alpha = 1.0 + (df / (s * s)).min(df.sqrt() / s);
            let c = (s * (s + df.sqrt())).min(df);
            (alpha, c)
        };
        let (alpha, c) = match self {
            QuantizerSpec::Identity => (1.0, df),
            QuantizerSpec::Sparsifier { probs } => match probs {
                Probabilities::Uniform(p) => (1.0 / p, p * df),
                Probabilities::PerCoordinate(ps) => {
                    let pmin = ps.iter().copied().fold(f64::INFINITY, f64::min);
                    (1.0 / pmin, ps.iter().sum())
                }
            },
            QuantizerSpec::Ternary => low_precision(1.0),
            QuantizerSpec::LowPrecision { levels } => low_precision(*levels as f64),
        };
        UrqBounds {
            alpha,
            beta: alpha - 1.0,
            c,
        }
    }

    /// Two-point law of every nonzero coordinate of `v`, in index order.
    pub fn coordinate_laws(&self, v: &SparseVec) -> Vec<(usize, CoordinateLaw)> {
        let norm = v.norm();
        v.iter()
            .map(|(i, x)| (i, self.law(i, x, norm)))
            .collect()
    }

    fn law(&self, i: usize, x: f64, norm: f64) -> CoordinateLaw {
        match self {
            QuantizerSpec::Identity => CoordinateLaw {
                low: x,
                high: x,
                p_high: 1.0,
            },
            QuantizerSpec::Sparsifier { probs } => sparsifier_law(probs.get(i), x),
            QuantizerSpec::Ternary => ternary_law(x, norm),
            QuantizerSpec::LowPrecision { levels } => low_precision_law(*levels, x, norm),
        }
    }

    /// Draws `Q(v)`. Identity consumes no randomness; the other quantizers
    /// draw one uniform per nonzero coordinate, in index order.
    pub fn compress<R: Rng + ?Sized>(&self, v: &SparseVec, rng: &mut R) -> QuantizedMsg {
        let d = v.dim();
        let mut payload = SparseVec::zeros(d);
        let norm = self.compress_payload_into(v, rng, &mut payload);
        let nnz = payload.nnz();
        QuantizedMsg {
            nnz,
            bits: self.message_bits(nnz, d),
            carries_norm: self.carries_norm(),
            norm,
            payload,
        }
    }

    /// Draws the payload of `compress` into `out`, reusing its buffers, and
    /// returns `‖v‖`. Consumes the same randomness as `compress`.
    pub fn compress_payload_into<R: Rng + ?Sized>(&self, v: &SparseVec, rng: &mut R, out: &mut SparseVec) -> f64 {
        let norm = v.norm();
        match self {
            QuantizerSpec::Identity => out.clone_from(v),
            _ if v.is_zero() => out.refill_sorted_pairs(v.dim(), []),
            QuantizerSpec::Sparsifier {
                probs: Probabilities::Uniform(p),
            } => sample(v, rng, out, |_, x| sparsifier_law(*p, x)),
            QuantizerSpec::Sparsifier {
                probs: Probabilities::PerCoordinate(ps),
            } => sample(v, rng, out, |i, x| sparsifier_law(ps[i], x)),
            QuantizerSpec::Ternary => sample(v, rng, out, |_, x| ternary_law(x, norm)),
            QuantizerSpec::LowPrecision { levels } => sample(v, rng, out, |_, x| low_precision_law(*levels, x, norm)),
        }
        norm
    }
}

#[inline(always)]
fn sample<R: Rng + ?Sized>(v: &SparseVec, rng: &mut R, out: &mut SparseVec, law: impl Fn(usize, f64) -> CoordinateLaw) {
    out.refill_sorted_pairs(
        v.dim(),
        v.iter().map(|(i, x)| {
            let law = law(i, x);
            let u: f64 = rng.random();
            (i, select(u < law.p_high, law.high, law.low))
        }),
    )
}

#[inline(always)]
fn sparsifier_law(p: f64, x: f64) -> CoordinateLaw {
    CoordinateLaw {
        low: 0.0,
        high: x / p,
        p_high: p,
    }
}

#[inline(always)]
fn ternary_law(x: f64, norm: f64) -> CoordinateLaw {
    CoordinateLaw {
        low: 0.0,
        high: norm.copysign(x),
        p_high: (x.abs() / norm).min(1.0),
    }
}

#[inline(always)]
fn low_precision_law(levels: u32, x: f64, norm: f64) -> CoordinateLaw {
    let s = levels as f64;
    let scaled = (x.abs() * s / norm).min(s);
    // |x| == |v| puts the ratio on the top endpoint; use the last interval
    // so that l + 1 <= s. The cast truncates, which is floor for scaled >= 0.
    let l = (scaled as u32).min(levels - 1);
    CoordinateLaw {
        low: level_value(norm, l, levels, x),
        high: level_value(norm, l + 1, levels, x),
        p_high: (scaled - l as f64).clamp(0.0, 1.0),
    }
}

/// Branch-free `if c { a } else { b }`; the outcome is a coin flip, so a
/// branch would mispredict half the time.
#[inline(always)]
fn select(c: bool, a: f64, b: f64) -> f64 {
    let mask = (c as u64).wrapping_neg();
    f64::from_bits((a.to_bits() & mask) | (b.to_bits() & !mask))
}

/// Value of quantization level `level` out of `levels`, signed like `sign_of`.
#[inline(always)]
pub(crate) fn level_value(norm: f64, level: u32, levels: u32, sign_of: f64) -> f64 {
    (norm * level as f64 / levels as f64).copysign(sign_of)
}
