//! Experiment driver: one dataset, several run configurations, several
//! seeds; CSV traces, mean/envelope aggregates, JSON sidecars and SVG
//! charts.
//!
//! Configuration keys (all optional unless noted):
//!
//! ```text
//! dataset            = gendense | gensparse | libsvm | csv     (required)
//! dataset.path       = file (libsvm) or directory (csv dump)
//! dataset.name       = csv dump name
//! dataset.dim        = feature count override (libsvm)
//! dataset.n, dataset.d, dataset.nnz_per_row, dataset.seed     (generators)
//! normalize          = true
//! workers            = 3
//! loss.rho           = n          (number of samples) or a positive number
//! loss.sigma         = 1
//! sparsity.source    = data | gradient
//! seeds              = 1,2,3
//! out                = out
//! plot               = true
//! runs               = name1,name2                             (required)
//! algorithm          = qgd | ciag | dqgd | qiag
//! quantizer          = identity | gs:<p> | tq | lp:<s>
//! gamma              = auto | <number>
//! rule               = step rule for auto (default: per algorithm)
//! theta              = 1
//! gamma.scale        = fraction of the auto step
//! delay              = zero | cyclic | random
//! tau                = workers (for delayed schemes)
//! iters              = 500
//! record_sigma_k     = false
//! sigma_table.quantizers = gs:0.5,tq,lp:4
//! sigma_table.draws, sigma_table.iterates, sigma_table.horizon, sigma_table.seed
//! ```
//!
//! Run keys may be scoped as `run.<name>.<key>`; unscoped keys are
//! defaults for every run.

pub mod config;
pub mod sigma;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{records_csv_bytes, run_observed, Algorithm, IterationView, Record, RunConfig, StepSize, Trace};
use crate::data::{gen_dense, gen_sparse, load_libsvm, normalize_rows, read_csv_dump, shard, Dataset};
use crate::error::{Error, Result};
use crate::loss::{estimate_gradient_bound, CurvatureOptions, LossConfig, Problem};
use crate::par::Exec;
use crate::quantizers::{wire, QuantizerSpec};
use crate::schedule::{DelayKind, DelaySchedule};
use crate::sparsity::SparsitySource;
use crate::theory::{evaluate, StepRule, TheoryInputs, TheoryReport};

pub use config::KeyValues;
pub use sigma::{table_sigma, SigmaTable, SigmaTableSpec};

/// One in this many messages is re-encoded on the wire during a run.
pub const AUDIT_STRIDE: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Libsvm { path: PathBuf, dim: Option<usize> },
    Csv { dir: PathBuf, name: String },
    GenDense { n: usize, d: usize, seed: u64 },
    GenSparse { n: usize, d: usize, nnz_per_row: usize, seed: u64 },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Libsvm { path, dim } => load_libsvm(path, *dim),
            DatasetSource::Csv { dir, name } => read_csv_dump(dir, name),
            DatasetSource::GenDense { n, d, seed } => Ok(gen_dense(*n, *d, *seed)),
            DatasetSource::GenSparse {
                n,
                d,
                nnz_per_row,
                seed,
            } => Ok(gen_sparse(*n, *d, *nnz_per_row, *seed)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rho {
    /// The number of samples.
    Samples,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub name: String,
    pub algorithm: Algorithm,
    pub quantizer: QuantizerSpec,
    pub step: StepSize,
    pub delay: DelayKind,
    pub tau: usize,
    pub iters: usize,
    pub record_sigma_k: bool,
}

impl RunSpec {
    pub fn schedule(&self, m: usize, seed: u64) -> DelaySchedule {
        match self.delay {
            DelayKind::Zero => DelaySchedule::zero(m),
            DelayKind::Cyclic => DelaySchedule::cyclic(m, self.tau),
            DelayKind::RandomBounded => DelaySchedule::random_bounded(m, self.tau, seed),
        }
    }

    pub fn config(&self, m: usize, seed: u64) -> RunConfig {
        RunConfig {
            algorithm: self.algorithm,
            quantizer: self.quantizer.clone(),
            step: self.step.clone(),
            schedule: self.schedule(m, seed),
            max_iters: self.iters,
            seed,
            record_sigma_k: self.record_sigma_k,
            x0: None,
        }
    }

    /// Rule the theory sidecar reports on.
    pub fn rule(&self) -> StepRule {
        match &self.step {
            StepSize::Auto { rule, .. } => *rule,
            StepSize::Fixed { .. } => self.algorithm.default_rule(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    pub normalize: bool,
    pub workers: usize,
    pub rho: Rho,
    pub reg_sigma: f64,
    pub sparsity_source: SparsitySource,
    pub runs: Vec<RunSpec>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub plot: bool,
    pub sigma_table: SigmaTableSpec,
}

/// Parses `identity`, `gs:<p>`, `tq`, `lp:<s>`.
pub fn parse_quantizer(s: &str) -> Result<QuantizerSpec> {
    let s = s.trim().to_ascii_lowercase();
    let bad = || Error::Config(format!("unknown quantizer `{s}`"));
    let (head, arg) = match s.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (s.as_str(), None),
    };
    let q = match (head, arg) {
        ("identity" | "full" | "none", None) => QuantizerSpec::Identity,
        ("tq" | "ternary", None) => QuantizerSpec::Ternary,
        ("gs" | "sparsifier", Some(p)) => QuantizerSpec::sparsifier(p.parse().map_err(|_| bad())?),
        ("lp" | "low_precision", Some(l)) => QuantizerSpec::low_precision(l.parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    Ok(q)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("key `{key}`: expected a boolean, got `{v}`"))),
    }
}

fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    config::split_list(v)
        .into_iter()
        .map(|s| s.parse().map_err(|_| Error::Config(format!("bad seed `{s}`"))))
        .collect()
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
}

impl ExperimentSpec {
    /// Reads a spec file; relative dataset paths resolve against its
    /// directory. `overrides` are `key=value` pairs applied on top.
    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut kv = KeyValues::parse(&text)?;
        for o in overrides {
            kv.set_pair(o)?;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_kv(&kv, base)
    }

    pub fn from_kv(kv: &KeyValues, base: &Path) -> Result<Self> {
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let kind = required(kv.get("dataset"), "dataset")?;
        let dataset = match kind {
            "libsvm" => DatasetSource::Libsvm {
                path: resolve(required(kv.get("dataset.path"), "dataset.path")?),
                dim: kv.parse_opt("dataset.dim")?,
            },
            "csv" => DatasetSource::Csv {
                dir: resolve(required(kv.get("dataset.path"), "dataset.path")?),
                name: kv.get_or("dataset.name", "csv").to_string(),
            },
            "gendense" => DatasetSource::GenDense {
                n: kv.parse_or("dataset.n", 4000)?,
                d: kv.parse_or("dataset.d", 100)?,
                seed: kv.parse_or("dataset.seed", 0)?,
            },
            "gensparse" => DatasetSource::GenSparse {
                n: kv.parse_or("dataset.n", 3000)?,
                d: kv.parse_or("dataset.d", 2000)?,
                nnz_per_row: kv.parse_or("dataset.nnz_per_row", 5)?,
                seed: kv.parse_or("dataset.seed", 0)?,
            },
            other => return Err(Error::Config(format!("unknown dataset kind `{other}`"))),
        };
        let normalize = parse_bool("normalize", kv.get_or("normalize", "true"))?;
        let workers: usize = kv.parse_or("workers", 3)?;
        let rho = match kv.get_or("loss.rho", "n") {
            "n" => Rho::Samples,
            v => Rho::Value(
                v.parse()
                    .map_err(|_| Error::Config(format!("key `loss.rho`: cannot parse `{v}`")))?,
            ),
        };
        let reg_sigma = kv.parse_or("loss.sigma", 1.0)?;
        let sparsity_source = match kv.get_or("sparsity.source", "data") {
            "data" => SparsitySource::Data,
            "gradient" => SparsitySource::Gradient,
            v => return Err(Error::Config(format!("unknown sparsity source `{v}`"))),
        };
        let seeds = parse_seeds(kv.get_or("seeds", "1"))?;
        if seeds.is_empty() {
            return Err(Error::Config("seeds list is empty".into()));
        }
        let out = PathBuf::from(kv.get_or("out", "out"));
        let plot = parse_bool("plot", kv.get_or("plot", "true"))?;

        let names = config::split_list(required(kv.get("runs"), "runs")?);
        if names.is_empty() {
            return Err(Error::Config("runs list is empty".into()));
        }
        let mut runs = Vec::new();
        for name in names {
            if runs.iter().any(|r: &RunSpec| r.name == name) {
                return Err(Error::Config(format!("run `{name}` listed twice")));
            }
            runs.push(Self::run_from_kv(kv, name, workers)?);
        }

        let mut sigma_table = SigmaTableSpec::default();
        if let Some(list) = kv.get("sigma_table.quantizers") {
            sigma_table.quantizers = config::split_list(list)
                .into_iter()
                .map(parse_quantizer)
                .collect::<Result<_>>()?;
        }
        sigma_table.draws = kv.parse_or("sigma_table.draws", sigma_table.draws)?;
        sigma_table.iterates = kv.parse_or("sigma_table.iterates", sigma_table.iterates)?;
        sigma_table.horizon = kv.parse_or("sigma_table.horizon", sigma_table.horizon)?;
        sigma_table.seed = kv.parse_or("sigma_table.seed", sigma_table.seed)?;

        kv.check_all_used()?;
        Ok(ExperimentSpec {
            dataset,
            normalize,
            workers,
            rho,
            reg_sigma,
            sparsity_source,
            runs,
            seeds,
            out,
            plot,
            sigma_table,
        })
    }

    fn run_from_kv(kv: &KeyValues, name: &str, workers: usize) -> Result<RunSpec> {
        if name.contains(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-')) {
            return Err(Error::Config(format!("run name `{name}` must be alphanumeric, `_` or `-`")));
        }
        let alg_s = kv.run_get(name, "algorithm").unwrap_or("qgd");
        let algorithm = Algorithm::parse(alg_s).ok_or_else(|| Error::Config(format!("unknown algorithm `{alg_s}`")))?;
        let quantizer = parse_quantizer(kv.run_get(name, "quantizer").unwrap_or("identity"))?;
        let theta: f64 = kv.run_parse_opt(name, "theta")?.unwrap_or(1.0);
        let scale: Option<f64> = kv.run_parse_opt(name, "gamma.scale")?;
        let rule = match kv.run_get(name, "rule") {
            Some(r) => StepRule::parse(r).ok_or_else(|| Error::Config(format!("unknown step rule `{r}`")))?,
            None => algorithm.default_rule(),
        };
        let step = match kv.run_get(name, "gamma").unwrap_or("auto") {
            "auto" => StepSize::Auto { rule, theta, scale },
            g => StepSize::Fixed {
                gamma: g
                    .parse()
                    .map_err(|_| Error::Config(format!("run `{name}`: bad gamma `{g}`")))?,
            },
        };
        let delay = match kv.run_get(name, "delay") {
            None if algorithm.allows_delays() => DelayKind::Cyclic,
            None | Some("zero") => DelayKind::Zero,
            Some("cyclic") => DelayKind::Cyclic,
            Some("random") => DelayKind::RandomBounded,
            Some(v) => return Err(Error::Config(format!("unknown delay `{v}`"))),
        };
        let tau = match delay {
            DelayKind::Zero => 0,
            _ => kv.run_parse_opt(name, "tau")?.unwrap_or(workers),
        };
        let record_sigma_k = parse_bool("record_sigma_k", kv.run_get(name, "record_sigma_k").unwrap_or("false"))?;
        Ok(RunSpec {
            name: name.to_string(),
            algorithm,
            quantizer,
            step,
            delay,
            tau,
            iters: kv.run_parse_opt(name, "iters")?.unwrap_or(500),
            record_sigma_k,
        })
    }

    /// Loads, normalizes and shards the dataset and solves for `x*`.
    pub fn load_problem(&self) -> Result<Problem> {
        let mut ds = self.dataset.load()?;
        if self.normalize {
            ds = normalize_rows(&ds);
        }
        let rho = match self.rho {
            Rho::Samples => ds.len() as f64,
            Rho::Value(r) => r,
        };
        let loss = LossConfig::new(rho, self.reg_sigma)?;
        let opts = CurvatureOptions {
            sparsity_source: self.sparsity_source,
            ..CurvatureOptions::default()
        };
        let mut problem = Problem::new(shard(&ds, self.workers)?, loss, &opts)?;
        let mut probes = sigma::reference_trajectory(&problem, 20);
        probes.push(problem.x_star.clone());
        problem.curvature.c_estimate = Some(estimate_gradient_bound(&problem.shards, &problem.loss, &probes));
        Ok(problem)
    }
}

/// Theory report for one run, at its own step size.
pub fn theory_report(problem: &Problem, run: &RunSpec) -> TheoryReport {
    let cfg = run.config(problem.m(), 0);
    let mut inp = TheoryInputs::from_problem(problem, &run.quantizer, cfg.schedule.bound(), 1.0, &cfg.start(problem.dim));
    match &run.step {
        StepSize::Auto { theta, scale, .. } => {
            inp.theta = *theta;
            inp.gamma_scale = *scale;
        }
        StepSize::Fixed { gamma } => inp.gamma = Some(*gamma),
    }
    evaluate(run.rule(), &inp)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checked: u64,
    pub mismatches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub gamma: Option<f64>,
    pub completed_seeds: Vec<u64>,
    /// `(seed, error)` for runs that aborted.
    pub failures: Vec<(u64, String)>,
    pub diverged: bool,
    pub mean_final_f_gap: Option<f64>,
    pub mean_total_bits: Option<f64>,
    pub audit: AuditReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub out: PathBuf,
    pub runs: Vec<RunSummary>,
}

impl ExperimentSummary {
    pub fn any_diverged(&self) -> bool {
        self.runs.iter().any(|r| r.diverged)
    }

    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| !r.failures.is_empty())
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("bad output path {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Mean and envelope over seeds at each `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub k: usize,
    pub f_gap_mean: f64,
    pub f_gap_min: f64,
    pub f_gap_max: f64,
    pub dist2_mean: f64,
    pub grad_norm2_mean: f64,
    pub bits_cum_mean: f64,
}

pub fn aggregate(traces: &[&[Record]]) -> Vec<AggregateRow> {
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let n = traces.len() as f64;
    (0..len)
        .map(|k| {
            let rows: Vec<&Record> = traces.iter().map(|t| &t[k]).collect();
            let mean = |f: fn(&Record) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            AggregateRow {
                k: rows[0].k,
                f_gap_mean: mean(|r| r.f_gap),
                f_gap_min: rows.iter().map(|r| r.f_gap).fold(f64::INFINITY, f64::min),
                f_gap_max: rows.iter().map(|r| r.f_gap).fold(f64::NEG_INFINITY, f64::max),
                dist2_mean: mean(|r| r.dist2),
                grad_norm2_mean: mean(|r| r.grad_norm2),
                bits_cum_mean: mean(|r| r.bits_cum as f64),
            }
        })
        .collect()
}

fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

struct Outcome {
    run: usize,
    seed: u64,
    result: Result<Trace>,
    audit: AuditReport,
}

fn run_one(problem: &Problem, run: &RunSpec, seed: u64) -> Outcome {
    let cfg = run.config(problem.m(), seed);
    let d = problem.dim;
    let q = cfg.quantizer.clone();
    let mut audit = AuditReport::default();
    let mut counter = 0u64;
    let mut observer = |view: &IterationView<'_>| -> Result<()> {
        for (_, msg) in view.sent {
            if counter.is_multiple_of(AUDIT_STRIDE) {
                audit.checked += 1;
                let ok = wire::encode(&q, msg).is_ok_and(|f| {
                    f.payload_bits() == msg.bits
                        && msg.bits == q.message_bits(msg.nnz, d)
                        && wire::decode(&q, d, &f).is_ok_and(|p| p == msg.payload)
                });
                if !ok {
                    audit.mismatches += 1;
                }
            }
            counter += 1;
        }
        Ok(())
    };
    let result = run_observed(problem, &cfg, Exec::Sequential, &mut observer);
    if let Ok(t) = &result {
        let logged: u64 = t.messages.iter().map(|m| q.message_bits(m.nnz, d)).sum();
        if logged != t.total_bits() {
            audit.mismatches += 1;
        }
    }
    Outcome {
        run: 0,
        seed,
        result,
        audit,
    }
}

/// Runs every `(run, seed)` pair and writes all artifacts into `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec, exec: Exec) -> Result<ExperimentSummary> {
    let problem = spec.load_problem()?;
    run_experiment_on(spec, &problem, exec)
}

/// As [`run_experiment`], on an already loaded problem.
pub fn run_experiment_on(spec: &ExperimentSpec, problem: &Problem, exec: Exec) -> Result<ExperimentSummary> {
    for r in &spec.runs {
        r.config(problem.m(), spec.seeds[0]).validate(problem)?;
    }
    let out = &spec.out;
    fs::create_dir_all(out)?;
    write_json(&out.join("config.json"), spec)?;
    write_json(&out.join("sparsity.json"), &problem.curvature.sparsity)?;
    write_json(
        &out.join("curvature.json"),
        &serde_json::json!({
            "curvature": problem.curvature,
            "dim": problem.dim,
            "workers": problem.m(),
            "f_star": problem.f_star,
            "grad_star_sq": problem.grad_star_sq,
        }),
    )?;
    for r in &spec.runs {
        write_json(&out.join(format!("theory_{}.json", r.name)), &theory_report(problem, r))?;
    }

    let pairs: Vec<(usize, u64)> = (0..spec.runs.len())
        .flat_map(|r| spec.seeds.iter().map(move |&s| (r, s)))
        .collect();
    let outcomes: Vec<Outcome> = exec.map_slice(&pairs, |&(ri, seed)| {
        let run = &spec.runs[ri];
        let mut o = run_one(problem, run, seed);
        o.run = ri;
        if let Ok(t) = &o.result {
            let base = format!("trace_{}_{}", run.name, seed);
            let written = records_csv_bytes(&t.records)
                .and_then(|b| write_atomic(&out.join(format!("{base}.csv")), &b))
                .and_then(|_| {
                    write_json(
                        &out.join(format!("{base}.json")),
                        &serde_json::json!({ "config": t.config, "gamma": t.gamma }),
                    )
                });
            if let Err(e) = written {
                o.result = Err(e);
            }
        }
        o
    });

    let mut summaries = Vec::new();
    let mut curves_iter = Vec::new();
    let mut curves_bits = Vec::new();
    for (ri, run) in spec.runs.iter().enumerate() {
        let mine: Vec<&Outcome> = outcomes.iter().filter(|o| o.run == ri).collect();
        let ok: Vec<&Trace> = mine.iter().filter_map(|o| o.result.as_ref().ok()).collect();
        let failures: Vec<(u64, String)> = mine
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(|e| (o.seed, e.to_string())))
            .collect();
        let diverged = mine.iter().any(|o| matches!(o.result, Err(Error::Diverged { .. })));
        let audit = mine.iter().fold(AuditReport::default(), |a, o| AuditReport {
            checked: a.checked + o.audit.checked,
            mismatches: a.mismatches + o.audit.mismatches,
        });
        let n = ok.len() as f64;
        let agg = aggregate(&ok.iter().map(|t| t.records.as_slice()).collect::<Vec<_>>());
        if !agg.is_empty() {
            write_atomic(&out.join(format!("agg_{}.csv", run.name)), &aggregate_csv(&agg)?)?;
            curves_iter.push(svg::Series {
                name: run.name.clone(),
                points: agg.iter().map(|a| (a.k as f64, a.f_gap_mean)).collect(),
            });
            curves_bits.push(svg::Series {
                name: run.name.clone(),
                points: agg.iter().map(|a| (a.bits_cum_mean, a.f_gap_mean)).collect(),
            });
        }
        summaries.push(RunSummary {
            name: run.name.clone(),
            gamma: ok.first().map(|t| t.gamma),
            completed_seeds: mine.iter().filter(|o| o.result.is_ok()).map(|o| o.seed).collect(),
            failures,
            diverged,
            mean_final_f_gap: (n > 0.0).then(|| ok.iter().map(|t| t.records.last().unwrap().f_gap).sum::<f64>() / n),
            mean_total_bits: (n > 0.0).then(|| ok.iter().map(|t| t.total_bits() as f64).sum::<f64>() / n),
            audit,
        });
    }
    if spec.plot {
        let fig = svg::line_chart("Suboptimality vs iterations", "iteration k", "f(x_k) - f*", &curves_iter, true);
        write_atomic(&out.join("fig_iters.svg"), fig.as_bytes())?;
        let fig = svg::line_chart("Suboptimality vs bits sent", "bits sent", "f(x_k) - f*", &curves_bits, true);
        write_atomic(&out.join("fig_bits.svg"), fig.as_bytes())?;
    }
    let summary = ExperimentSummary {
        out: out.clone(),
        runs: summaries,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantizer_strings() {
        assert_eq!(parse_quantizer("identity").unwrap(), QuantizerSpec::Identity);
        assert_eq!(parse_quantizer("TQ").unwrap(), QuantizerSpec::Ternary);
        assert_eq!(parse_quantizer("gs:0.5").unwrap(), QuantizerSpec::sparsifier(0.5));
        assert_eq!(parse_quantizer("lp:4").unwrap(), QuantizerSpec::low_precision(4));
        assert!(parse_quantizer("lp").is_err());
        assert!(parse_quantizer("gs:x").is_err());
    }

    #[test]
    fn run_defaults_and_overrides() {
        let kv = KeyValues::parse(
            "dataset = gendense\nruns = a,b\nworkers = 4\nrun.b.algorithm = qiag\nrun.b.quantizer = tq\ngamma.scale = 0.5\n",
        )
        .unwrap();
        let s = ExperimentSpec::from_kv(&kv, Path::new(".")).unwrap();
        assert_eq!(s.runs[0].algorithm, Algorithm::Qgd);
        assert_eq!(s.runs[0].delay, DelayKind::Zero);
        assert_eq!(s.runs[1].algorithm, Algorithm::Qiag);
        assert_eq!(s.runs[1].delay, DelayKind::Cyclic);
        assert_eq!(s.runs[1].tau, 4);
        assert_eq!(s.runs[1].quantizer, QuantizerSpec::Ternary);
        assert!(matches!(s.runs[1].step, StepSize::Auto { scale: Some(0.5), .. }));
        assert_eq!(s.rho, Rho::Samples);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let kv = KeyValues::parse("dataset = gendense\nruns = a\nitres = 5\n").unwrap();
        assert!(matches!(ExperimentSpec::from_kv(&kv, Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn aggregate_of_one_is_identity() {
        let recs = vec![Record {
            k: 0,
            f_gap: 0.3,
            dist2: 0.7,
            grad_norm2: 1.1,
            bits_cum: 5,
            sigma_k: None,
        }];
        let a = aggregate(&[&recs]);
        assert_eq!(a[0].f_gap_mean, 0.3);
        assert_eq!(a[0].f_gap_min, 0.3);
        assert_eq!(a[0].f_gap_max, 0.3);
        assert_eq!(a[0].dist2_mean, 0.7);
        assert_eq!(a[0].bits_cum_mean, 5.0);
    }
}
