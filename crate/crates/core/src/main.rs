use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use compgrad::harness::{run_experiment, table_sigma, theory_report, ExperimentSpec};
use compgrad::par::Exec;
use compgrad::Error;

#[derive(Parser)]
#[command(name = "compgrad", version, about = "Compressed gradient experiments")]
struct Cli {
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    /// Override a spec key, e.g. `--set iters=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every configured run for every seed and write artifacts.
    Run {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seed list.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        no_plot: bool,
    },
    /// Print static and realized sparsity factors per quantizer.
    SigmaTable { spec: PathBuf },
    /// Print the predicted rates for each configured run.
    Theory { spec: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::NoSamples | Error::NotStronglyConvex => 2,
        Error::Diverged { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match dispatch(cli, exec) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: Cli, exec: Exec) -> compgrad::Result<u8> {
    let mut overrides = cli.set;
    match cli.cmd {
        Cmd::Run {
            spec,
            out,
            seeds,
            no_plot,
        } => {
            if let Some(s) = seeds {
                overrides.push(format!("seeds={s}"));
            }
            if no_plot {
                overrides.push("plot=false".into());
            }
            let mut spec = ExperimentSpec::from_file(&spec, &overrides)?;
            if let Some(o) = out {
                spec.out = o;
            }
            let summary = run_experiment(&spec, exec)?;
            for r in &summary.runs {
                let gap = r.mean_final_f_gap.map_or("-".into(), |g| format!("{g:.3e}"));
                let bits = r.mean_total_bits.map_or("-".into(), |b| format!("{b:.3e}"));
                println!(
                    "{:<16} seeds ok {:>3}  failed {:>3}  final f-gap {gap:>10}  bits {bits:>10}  audit {}/{}",
                    r.name,
                    r.completed_seeds.len(),
                    r.failures.len(),
                    r.audit.checked - r.audit.mismatches,
                    r.audit.checked
                );
                for (seed, err) in &r.failures {
                    eprintln!("  seed {seed}: {err}");
                }
            }
            println!("artifacts in {}", summary.out.display());
            Ok(if summary.any_diverged() {
                3
            } else if summary.any_failed() {
                1
            } else {
                0
            })
        }
        Cmd::SigmaTable { spec } => {
            let spec = ExperimentSpec::from_file(&spec, &overrides)?;
            let problem = spec.load_problem()?;
            let t = table_sigma(&problem, spec.sparsity_source, &spec.sigma_table, exec)?;
            println!(
                "m = {}  delta_ave = {:.4}  delta_max = {}  sigma/m = {:.4}",
                t.m,
                t.sparsity.delta_ave,
                t.sparsity.delta_max,
                t.sparsity.sigma_over_m()
            );
            println!("{:<10} {:>10} {:>14} {:>10}", "quantizer", "sigma/m", "E sigma_k/m", "std err");
            for r in &t.rows {
                println!(
                    "{:<10} {:>10.4} {:>14.4} {:>10.2e}",
                    r.quantizer, r.sigma_over_m, r.mean_sigma_k_over_m, r.std_err
                );
            }
            Ok(0)
        }
        Cmd::Theory { spec } => {
            let spec = ExperimentSpec::from_file(&spec, &overrides)?;
            let problem = spec.load_problem()?;
            let reports: Vec<_> = spec
                .runs
                .iter()
                .map(|r| serde_json::json!({ "run": r.name, "report": theory_report(&problem, r) }))
                .collect();
            println!("{}", serde_json::to_string_pretty(&reports)?);
            Ok(0)
        }
    }
}
