//! The four compressed gradient iterations as a simulated master/worker loop.
//!
//! | scheme | gradients           | compression                     |
//! |--------|---------------------|---------------------------------|
//! | QGD    | fresh               | once, at the master             |
//! | CIAG   | stale (schedule)    | once, at the master             |
//! | DQGD   | fresh               | per worker                      |
//! | QIAG   | stale (schedule)    | per worker, when recomputed     |
//!
//! Central compression at iteration `k` draws from the stream keyed
//! `(seed, k, 0)`; worker `i` draws from `(seed, k, i)`. Sums are taken in
//! ascending worker order, so runs are bit-for-bit reproducible regardless
//! of the execution mode.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{grad_component, value_and_grad, Problem};
use crate::par::Exec;
use crate::quantizers::{QuantizedMsg, QuantizerSpec};
use crate::rng::compress_stream;
use crate::schedule::{DelayKind, DelaySchedule};
use crate::sparse::{dist_sq, norm_sq, SparseVec};
use crate::sparsity::sigma_realized;
use crate::theory::{evaluate, StepRule, TheoryInputs, TheoryReport};

/// Iterates with a norm above this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Qgd,
    Ciag,
    Dqgd,
    Qiag,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qgd => "qgd",
            Algorithm::Ciag => "ciag",
            Algorithm::Dqgd => "dqgd",
            Algorithm::Qiag => "qiag",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        [Algorithm::Qgd, Algorithm::Ciag, Algorithm::Dqgd, Algorithm::Qiag]
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
    }

    pub fn per_worker(self) -> bool {
        matches!(self, Algorithm::Dqgd | Algorithm::Qiag)
    }

    pub fn allows_delays(self) -> bool {
        matches!(self, Algorithm::Ciag | Algorithm::Qiag)
    }

    /// Step rule used by `auto` when none is named.
    pub fn default_rule(self) -> StepRule {
        match self {
            Algorithm::Qgd => StepRule::QgdStrong,
            Algorithm::Ciag => StepRule::CiagStrong,
            Algorithm::Dqgd => StepRule::DqgdStrong,
            Algorithm::Qiag => StepRule::QiagStrong,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepSize {
    Fixed {
        gamma: f64,
    },
    /// Step prescribed by a convergence result, optionally scaled.
    Auto {
        rule: StepRule,
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub quantizer: QuantizerSpec,
    pub step: StepSize,
    pub schedule: DelaySchedule,
    pub max_iters: usize,
    pub seed: u64,
    #[serde(default)]
    pub record_sigma_k: bool,
    /// Starting point; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, quantizer: QuantizerSpec, step: StepSize, m: usize, max_iters: usize, seed: u64) -> Self {
        RunConfig {
            algorithm,
            quantizer,
            step,
            schedule: DelaySchedule::zero(m),
            max_iters,
            seed,
            record_sigma_k: false,
            x0: None,
        }
    }

    pub fn with_schedule(mut self, schedule: DelaySchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let m = problem.m();
        if self.schedule.m != m {
            return Err(Error::Config(format!(
                "schedule built for {} workers, problem has {m}",
                self.schedule.m
            )));
        }
        self.schedule.validate()?;
        if !self.algorithm.allows_delays() && self.schedule.kind != DelayKind::Zero {
            return Err(Error::Config(format!(
                "{} runs synchronously; use the zero delay schedule",
                self.algorithm.name()
            )));
        }
        self.quantizer.validate(problem.dim)?;
        if let Some(x0) = &self.x0 {
            if x0.len() != problem.dim {
                return Err(Error::Config(format!("x0 has length {}, expected {}", x0.len(), problem.dim)));
            }
        }
        if let StepSize::Fixed { gamma } = self.step {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::Config(format!("step size must be positive, got {gamma}")));
            }
        }
        Ok(())
    }

    pub fn start(&self, dim: usize) -> Vec<f64> {
        self.x0.clone().unwrap_or_else(|| vec![0.0; dim])
    }

    /// Resolves the step size, returning the theory report for `auto`.
    pub fn resolve_step(&self, problem: &Problem) -> Result<(f64, Option<TheoryReport>)> {
        match &self.step {
            StepSize::Fixed { gamma } => Ok((*gamma, None)),
            StepSize::Auto { rule, theta, scale } => {
                let mut inp = TheoryInputs::from_problem(
                    problem,
                    &self.quantizer,
                    self.schedule.bound(),
                    *theta,
                    &self.start(problem.dim),
                );
                inp.gamma_scale = *scale;
                let report = evaluate(*rule, &inp);
                if !report.applicable {
                    return Err(Error::Config(format!(
                        "step rule {} not applicable: {}",
                        rule.name(),
                        report.reason.as_deref().unwrap_or("unknown")
                    )));
                }
                let gamma = if report.gamma == report.gamma_bound {
                    report.gamma * scale.unwrap_or(1.0)
                } else {
                    report.gamma
                };
                Ok((gamma, Some(report)))
            }
        }
    }
}

/// Metrics at iterate `x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub k: usize,
    pub f_gap: f64,
    pub dist2: f64,
    pub grad_norm2: f64,
    /// Bits sent by iterations `0..k`.
    pub bits_cum: u64,
    /// Realized sparsity factor of the messages summed at iteration `k - 1`.
    pub sigma_k: Option<f64>,
}

/// One transmitted message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub k: usize,
    /// Sending worker; `None` for the master's compressed aggregate.
    pub worker: Option<usize>,
    pub nnz: usize,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: RunConfig,
    pub gamma: f64,
    /// Records for `x_0 .. x_K`.
    pub records: Vec<Record>,
    pub messages: Vec<MessageRecord>,
    pub x_final: Vec<f64>,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn total_bits(&self) -> u64 {
        self.records.last().map_or(0, |r| r.bits_cum)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_records_csv(&self.records, path)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    k: usize,
    f_gap: f64,
    dist2: f64,
    grad_norm2: f64,
    bits_cum: u64,
    sigma_k: Option<f64>,
}

/// Trace records as CSV text.
pub fn records_csv_bytes(records: &[Record]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow {
            k: r.k,
            f_gap: r.f_gap,
            dist2: r.dist2,
            grad_norm2: r.grad_norm2,
            bits_cum: r.bits_cum,
            sigma_k: r.sigma_k,
        })?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(e.into_error()))
}

pub fn write_records_csv(records: &[Record], path: &Path) -> Result<()> {
    std::fs::write(path, records_csv_bytes(records)?)?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<Record>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: CsvRow = row?;
        out.push(Record {
            k: row.k,
            f_gap: row.f_gap,
            dist2: row.dist2,
            grad_norm2: row.grad_norm2,
            bits_cum: row.bits_cum,
            sigma_k: row.sigma_k,
        });
    }
    Ok(out)
}

/// Per-worker gradient last received by the master.
#[derive(Debug, Clone)]
pub struct TableEntry {
    /// Index of the iterate the gradient was computed at.
    pub iter: usize,
    pub grad: Vec<f64>,
    /// Compressed gradient, for per-worker compression.
    pub msg: Option<QuantizedMsg>,
}

#[derive(Debug, Clone, Default)]
pub struct GradientTable {
    entries: Vec<Option<TableEntry>>,
}

impl GradientTable {
    pub fn new(m: usize) -> Self {
        GradientTable {
            entries: vec![None; m],
        }
    }

    pub fn get(&self, i: usize) -> Option<&TableEntry> {
        self.entries[i].as_ref()
    }

    fn needs(&self, i: usize, iter: usize) -> bool {
        self.entries[i].as_ref().is_none_or(|e| e.iter != iter)
    }

    /// Errors if any entry is older than `tau` at iteration `k`.
    pub fn check_ages(&self, k: usize, tau: usize) -> Result<()> {
        for (worker, e) in self.entries.iter().enumerate() {
            let e = e.as_ref().expect("table filled before use");
            let age = k - e.iter;
            if age > tau {
                return Err(Error::StaleGradient { k, worker, age, tau });
            }
        }
        Ok(())
    }
}

/// What the master does at iteration `k`, offered to an observer before the
/// step is applied.
pub struct IterationView<'a> {
    pub k: usize,
    pub x: &'a [f64],
    /// Messages sent during this iteration, with their senders.
    pub sent: &'a [(Option<usize>, &'a QuantizedMsg)],
    /// Vectors whose sum is the update direction.
    pub summed: &'a [&'a SparseVec],
}

pub trait Observer {
    fn observe(&mut self, view: &IterationView<'_>) -> Result<()>;
}

impl<F: FnMut(&IterationView<'_>) -> Result<()>> Observer for F {
    fn observe(&mut self, view: &IterationView<'_>) -> Result<()> {
        self(view)
    }
}

struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: &IterationView<'_>) -> Result<()> {
        Ok(())
    }
}

fn record(problem: &Problem, k: usize, x: &[f64], bits_cum: u64, sigma_k: Option<f64>) -> Record {
    let (f, g) = value_and_grad(&problem.shards, &problem.loss, x);
    Record {
        k,
        f_gap: f - problem.f_star,
        dist2: dist_sq(x, &problem.x_star),
        grad_norm2: norm_sq(&g),
        bits_cum,
        sigma_k,
    }
}

/// Runs `cfg.algorithm` with a given execution mode and observer.
pub fn run_observed(problem: &Problem, cfg: &RunConfig, exec: Exec, observer: &mut dyn Observer) -> Result<Trace> {
    cfg.validate(problem)?;
    let (gamma, _) = cfg.resolve_step(problem)?;
    let m = problem.m();
    let d = problem.dim;
    let tau = cfg.schedule.bound();
    let per_worker = cfg.algorithm.per_worker();
    let q = &cfg.quantizer;

    let mut x = cfg.start(d);
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(tau + 1);
    history.push_back(x.clone());
    let mut table = GradientTable::new(m);
    let mut bits_cum = 0u64;
    let mut messages = Vec::new();
    let mut records = Vec::with_capacity(cfg.max_iters + 1);
    records.push(record(problem, 0, &x, 0, None));

    for k in 0..cfg.max_iters {
        let targets: Vec<usize> = (0..m).map(|i| k - cfg.schedule.staleness(k, i)).collect();
        let refresh: Vec<usize> = (0..m).filter(|&i| table.needs(i, targets[i])).collect();
        let oldest = k + 1 - history.len();
        let fresh = exec.map(refresh.len(), |j| {
            let i = refresh[j];
            let at = &history[targets[i] - oldest];
            let grad = grad_component(&problem.shards[i], &problem.loss, at);
            let msg = per_worker.then(|| q.compress(&SparseVec::from_dense(&grad), &mut compress_stream(cfg.seed, k, i)));
            TableEntry {
                iter: targets[i],
                grad,
                msg,
            }
        });
        for (&i, e) in refresh.iter().zip(fresh) {
            table.entries[i] = Some(e);
        }
        table.check_ages(k, tau)?;

        let mut sent: Vec<(Option<usize>, &QuantizedMsg)> = Vec::new();
        let central;
        let mut sigma_k = None;
        let summed: Vec<&SparseVec> = if per_worker {
            for &i in &refresh {
                sent.push((Some(i), table.entries[i].as_ref().unwrap().msg.as_ref().unwrap()));
            }
            let s: Vec<&SparseVec> = table
                .entries
                .iter()
                .map(|e| &e.as_ref().unwrap().msg.as_ref().unwrap().payload)
                .collect();
            if cfg.record_sigma_k {
                sigma_k = Some(sigma_realized(&s));
            }
            s
        } else {
            let mut agg = vec![0.0; d];
            for e in &table.entries {
                for (a, g) in agg.iter_mut().zip(&e.as_ref().unwrap().grad) {
                    *a += g;
                }
            }
            central = q.compress(&SparseVec::from_dense(&agg), &mut compress_stream(cfg.seed, k, 0));
            sent.push((None, &central));
            vec![&central.payload]
        };

        observer.observe(&IterationView {
            k,
            x: &x,
            sent: &sent,
            summed: &summed,
        })?;

        for (worker, msg) in &sent {
            bits_cum += msg.bits;
            messages.push(MessageRecord {
                k,
                worker: *worker,
                nnz: msg.nnz,
                bits: msg.bits,
            });
        }
        for v in &summed {
            v.axpy_into(-gamma, &mut x);
        }
        let norm = norm_sq(&x).sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { k: k + 1, norm });
        }
        if history.len() == tau + 1 {
            history.pop_front();
        }
        history.push_back(x.clone());
        records.push(record(problem, k + 1, &x, bits_cum, sigma_k));
    }

    Ok(Trace {
        config: cfg.clone(),
        gamma,
        records,
        messages,
        x_final: x,
    })
}

/// Runs `cfg.algorithm` on the default execution mode.
pub fn run(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    run_observed(problem, cfg, Exec::default(), &mut NoObserver)
}

fn run_as(problem: &Problem, cfg: &RunConfig, algorithm: Algorithm) -> Result<Trace> {
    let cfg = RunConfig {
        algorithm,
        ..cfg.clone()
    };
    run(problem, &cfg)
}

/// `x_{k+1} = x_k - gamma Q(sum_i grad f_i(x_k))`
pub fn run_qgd(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    run_as(problem, cfg, Algorithm::Qgd)
}

/// `x_{k+1} = x_k - gamma Q(sum_i grad f_i(x_{k - tau_k^i}))`
pub fn run_ciag(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    run_as(problem, cfg, Algorithm::Ciag)
}

/// `x_{k+1} = x_k - gamma sum_i Q(grad f_i(x_k))`
pub fn run_dqgd(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    run_as(problem, cfg, Algorithm::Dqgd)
}

/// `x_{k+1} = x_k - gamma sum_i Q(grad f_i(x_{k - tau_k^i}))`
pub fn run_qiag(problem: &Problem, cfg: &RunConfig) -> Result<Trace> {
    run_as(problem, cfg, Algorithm::Qiag)
}
