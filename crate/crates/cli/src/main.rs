use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pint_core::experiments::{
    coarse_step_sweep, error_profile, estimate_k_distribution, expectation_curve,
};
use pint_core::{
    run_parareal, run_stochastic_parareal, BenchmarkCase, ProblemName, RunResult, SamplingRule,
    SolverConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "pint",
    version,
    about = "Parareal and stochastic parareal experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single solve and print a JSON summary.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Solver::Stochastic)]
        solver: Solver,
    },
    /// Distribution of the stochastic iteration count.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        realizations: usize,
    },
    /// Expectation and standard deviation of the iteration count against M.
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        realizations: usize,
        /// Comma-separated sample counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20")]
        m_list: Vec<usize>,
    },
    /// Beat probability against M for several coarse step counts.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        realizations: usize,
        /// Comma-separated coarse steps per sub-interval.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        coarse_steps: Vec<usize>,
        /// Comma-separated sample counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
        m_list: Vec<usize>,
    },
    /// Error of stochastic and parareal solutions against the serial fine solution.
    Errors {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        realizations: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_parser = parse_problem)]
    problem: ProblemName,
    #[arg(long, value_parser = parse_rule)]
    rule: Option<SamplingRule>,
    /// Samples per sub-interval (M).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    correlations: Switch,
    /// Overrides the problem's reference tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, env = "PINT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Defaults to json for solve and csv otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Parareal,
    Stochastic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_problem(s: &str) -> Result<ProblemName, String> {
    s.parse().map_err(|e: pint_core::PintError| e.to_string())
}

fn parse_rule(s: &str) -> Result<SamplingRule, String> {
    s.parse().map_err(|e: pint_core::PintError| e.to_string())
}

impl Common {
    fn case(&self) -> BenchmarkCase {
        self.problem.case()
    }

    fn config(&self, case: &BenchmarkCase) -> Result<SolverConfig> {
        let defaults = SolverConfig::with_tolerance(self.tolerance.unwrap_or(case.tolerance));
        let config = SolverConfig {
            n_samples: self.samples.map_or(1, |m| m as usize),
            sampling_rule: self.rule.unwrap_or(SamplingRule::Rule1),
            use_correlations: self.correlations == Switch::On,
            rng_seed: self.seed,
            worker_count: self.workers.unwrap_or(defaults.worker_count),
            ..defaults
        };
        config.validate()?;
        Ok(config)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.output {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
            }
            None => io::stdout()
                .write_all(text.as_bytes())
                .context("cannot write to stdout"),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn solve(common: &Common, solver: Solver) -> Result<bool> {
    let case = common.case();
    let config = common.config(&case)?;
    let result: RunResult = match solver {
        Solver::Parareal => {
            if common.samples.is_some() || common.rule.is_some() {
                eprintln!("warning: --samples and --rule are ignored by the parareal solver");
            }
            run_parareal(&case.system, &case.mesh, &config)?
        }
        Solver::Stochastic => run_stochastic_parareal(&case.system, &case.mesh, &config)?,
    };
    let label = match solver {
        Solver::Parareal => "parareal",
        Solver::Stochastic => "stochastic",
    };
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let summary = json!({
                "problem": case.name.as_str(),
                "solver": label,
                "iterations": result.iterations,
                "converged": result.converged,
                "fine_solver_calls": result.fine_solver_calls,
                "coarse_solver_calls": result.coarse_solver_calls,
                "max_processors_used": result.max_processors_used,
                "per_iteration_error": result.per_iteration_error,
                "prefix_history": result.prefix_history,
                "processor_usage": result.processor_usage,
                "boundary_values": result.boundary_values,
            });
            serde_json::to_string_pretty(&summary)? + "\n"
        }
        Format::Csv => {
            let mut out = String::from("iteration,error,converged_prefix,processors\n");
            for (i, ((e, p), u)) in result
                .per_iteration_error
                .iter()
                .zip(&result.prefix_history)
                .zip(&result.processor_usage)
                .enumerate()
            {
                writeln!(out, "{},{},{p},{u}", i + 1, num(*e))?;
            }
            out
        }
    };
    common.emit(&text)?;
    eprintln!(
        "{label}: {} iterations, converged: {}",
        result.iterations, result.converged
    );
    Ok(result.converged)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { common, solver } => solve(&common, solver),
        Command::Mc {
            common,
            realizations,
        } => {
            let case = common.case();
            let config = common.config(&case)?;
            let dist = estimate_k_distribution(&case, &config, realizations, common.seed)?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Json => serde_json::to_string_pretty(&dist)? + "\n",
                Format::Csv => {
                    let mut out = String::from("k,count,probability\n");
                    for (&k, &count) in &dist.counts {
                        writeln!(out, "{k},{count},{}", num(dist.probability(k)))?;
                    }
                    out
                }
            };
            common.emit(&text)?;
            if dist.failures > 0 {
                eprintln!("{} of {realizations} realizations failed", dist.failures);
            }
            Ok(dist.failures == 0)
        }
        Command::Curve {
            common,
            realizations,
            m_list,
        } => {
            if common.samples.is_some() {
                eprintln!("warning: --samples is ignored by curve; use --m-list");
            }
            let case = common.case();
            let config = common.config(&case)?;
            let points = expectation_curve(&case, &config, &m_list, realizations, common.seed)?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Json => serde_json::to_string_pretty(&points)? + "\n",
                Format::Csv => {
                    let mut out = String::from("M,expectation,sd\n");
                    for p in &points {
                        writeln!(out, "{},{},{}", p.n_samples, num(p.expectation), num(p.sd))?;
                    }
                    out
                }
            };
            common.emit(&text)?;
            Ok(points.iter().all(|p| p.expectation.is_finite()))
        }
        Command::Sweep {
            common,
            realizations,
            coarse_steps,
            m_list,
        } => {
            let case = common.case();
            let config = common.config(&case)?;
            let rows = coarse_step_sweep(
                &case,
                &config,
                &coarse_steps,
                &m_list,
                realizations,
                common.seed,
            )?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
                Format::Csv => {
                    let mut out = String::from("coarse_steps,kd,M,beat_probability\n");
                    for r in &rows {
                        writeln!(
                            out,
                            "{},{},{},{}",
                            r.coarse_steps,
                            r.kd,
                            r.n_samples,
                            num(r.beat_probability)
                        )?;
                    }
                    out
                }
            };
            common.emit(&text)?;
            Ok(true)
        }
        Command::Errors {
            common,
            realizations,
        } => {
            if common.output.is_none() {
                bail!("errors writes one row per fine step and component; pass --output");
            }
            let case = common.case();
            let config = common.config(&case)?;
            let profile = error_profile(&case, &config, realizations, common.seed)?;
            let text = match common.format.unwrap_or(Format::Csv) {
                Format::Json => serde_json::to_string(&profile)? + "\n",
                Format::Csv => {
                    let mut out =
                        String::from("time,component,mean_abs_error,two_sd,parareal_error\n");
                    for (t, time) in profile.times.iter().enumerate() {
                        for c in 0..case.system.dimension() {
                            writeln!(
                                out,
                                "{},{c},{},{},{}",
                                num(*time),
                                num(profile.mean_abs_error[t][c]),
                                num(profile.two_sd[t][c]),
                                num(profile.parareal_error[t][c]),
                            )?;
                        }
                    }
                    out
                }
            };
            common.emit(&text)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
