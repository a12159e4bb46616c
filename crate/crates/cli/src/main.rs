//! Command-line front end: synthesize, validate, simulate and render
//! 802.1Qbv gate control list schedules.

mod gantt;
mod gcl;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use gatesched_core::pipeline::{synthesize, SolverConfig};
use gatesched_core::schedule::Schedule;
use gatesched_core::simulator::{isolation_probe, offsets_from_seed, simulate, SimConfig};
use gatesched_core::smtlib::{default_solver_command, SolverStatus};
use gatesched_core::validator::{check_schedule, ValidateError};

use problem::{load_problem, parse_arithmetic, parse_objective, parse_ordering, Problem};

/// Exit codes: 0 validated sat, 1 findings, 2 unsat, 3 timeout/unknown,
/// 4 input error, 5 solver error.
const EXIT_FINDINGS: u8 = 1;
const EXIT_UNSAT: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_INPUT: u8 = 4;
const EXIT_SOLVER: u8 = 5;

#[derive(Parser)]
#[command(name = "gatesched", version, about = "802.1Qbv gate control list synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a schedule for a problem file and export GCLs.
    Schedule {
        problem: PathBuf,
        /// Output directory for schedule.json, gcl.json and report.json.
        #[arg(long, default_value = "gatesched-out")]
        out: PathBuf,
        /// Solver command line (default: $GATESCHED_SOLVER or "z3 -in").
        #[arg(long)]
        solver: Option<String>,
        /// Solver timeout in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        /// Override window ordering: seq | pairwise.
        #[arg(long)]
        ordering: Option<String>,
        /// Override arithmetic: lin | nia.
        #[arg(long)]
        arith: Option<String>,
        /// Override objective: none | e2e | jitter.
        #[arg(long)]
        objective: Option<String>,
        /// Force multi-period mode.
        #[arg(long)]
        multi_period: bool,
        /// Persist the emitted SMT-LIB2 script.
        #[arg(long)]
        emit_smt: Option<PathBuf>,
    },
    /// Re-check a schedule file against its problem file.
    Validate {
        schedule: PathBuf,
        problem: PathBuf,
    },
    /// Replay a schedule in the discrete-event gate simulator.
    Simulate {
        schedule: PathBuf,
        problem: PathBuf,
        /// Horizon in hyperperiods.
        #[arg(long, default_value_t = 2)]
        duration: u32,
        /// Seed for random clock offsets within the problem's precision.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumerate all single-frame-loss scenarios (isolation probe).
        #[arg(long)]
        loss: bool,
        /// Write the event trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Render a schedule as a text gantt chart.
    Gantt { schedule: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_INPUT
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Schedule {
            problem,
            out,
            solver,
            timeout,
            ordering,
            arith,
            objective,
            multi_period,
            emit_smt,
        } => cmd_schedule(
            &problem, &out, solver, timeout, ordering, arith, objective, multi_period, emit_smt,
        ),
        Command::Validate { schedule, problem } => cmd_validate(&schedule, &problem),
        Command::Simulate { schedule, problem, duration, seed, loss, trace } => {
            cmd_simulate(&schedule, &problem, duration, seed, loss, trace.as_deref())
        }
        Command::Gantt { schedule } => cmd_gantt(&schedule),
    }
}

#[derive(Serialize)]
struct RunReport {
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective_value: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal: Option<bool>,
    wall_ms: u128,
    warnings: Vec<String>,
    violations: Vec<gatesched_core::validator::Violation>,
    assertion_counts: std::collections::BTreeMap<String, usize>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_schedule(
    problem_path: &std::path::Path,
    out: &std::path::Path,
    solver: Option<String>,
    timeout: f64,
    ordering: Option<String>,
    arith: Option<String>,
    objective: Option<String>,
    multi_period: bool,
    emit_smt: Option<PathBuf>,
) -> Result<u8> {
    let Problem { network, streams, mut encoder } = load_problem(problem_path)?;
    if let Some(name) = ordering {
        encoder.ordering = parse_ordering(&name)?;
    }
    if let Some(name) = arith {
        encoder.arithmetic = parse_arithmetic(&name)?;
    }
    if let Some(name) = objective {
        encoder.objective = parse_objective(&name)?;
    }
    if multi_period {
        encoder.multi_period = true;
    }

    let solver_cfg = SolverConfig {
        command: solver
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .unwrap_or_else(default_solver_command),
        timeout: Duration::from_secs_f64(timeout),
        emit_path: emit_smt,
    };

    let report = match synthesize(&network, &streams, &encoder, &solver_cfg) {
        Ok(report) => report,
        Err(gatesched_core::pipeline::PipelineError::Model(err)) => {
            eprintln!("error: {err}");
            return Ok(EXIT_INPUT);
        }
        Err(gatesched_core::pipeline::PipelineError::Encode(err)) => {
            eprintln!("error: {err}");
            return Ok(EXIT_INPUT);
        }
        Err(err) => {
            eprintln!("error: {err}");
            return Ok(EXIT_SOLVER);
        }
    };

    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output dir {}", out.display()))?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    let status_name = match &report.status {
        SolverStatus::Sat => "sat",
        SolverStatus::Unsat => "unsat",
        SolverStatus::Unknown => "unknown",
        SolverStatus::Timeout => "timeout",
        SolverStatus::SolverError(_) => "solver-error",
    };
    let run_report = RunReport {
        status: status_name.to_string(),
        objective_value: report.objective_value,
        optimal: report.optimal,
        wall_ms: report.wall.as_millis(),
        warnings: report.warnings.clone(),
        violations: report.violations.clone(),
        assertion_counts: report
            .assertion_counts
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
    };
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&run_report)?)?;

    match &report.status {
        SolverStatus::Sat => {
            let schedule = report.schedule.as_ref().expect("sat implies schedule");
            std::fs::write(out.join("schedule.json"), serde_json::to_string_pretty(schedule)?)?;
            std::fs::write(
                out.join("gcl.json"),
                serde_json::to_string_pretty(&gcl::export(schedule))?,
            )?;
            if report.violations.is_empty() {
                println!("sat: schedule validated, artifacts in {}", out.display());
                Ok(0)
            } else {
                eprintln!(
                    "sat but the validator found {} violation(s); see report.json",
                    report.violations.len()
                );
                Ok(EXIT_FINDINGS)
            }
        }
        SolverStatus::Unsat => {
            println!("unsat: no schedule exists under the given constraints");
            Ok(EXIT_UNSAT)
        }
        SolverStatus::Unknown | SolverStatus::Timeout => {
            println!("{status_name}: solver gave up before a verdict");
            Ok(EXIT_UNKNOWN)
        }
        SolverStatus::SolverError(message) => {
            eprintln!("solver error: {message}");
            Ok(EXIT_SOLVER)
        }
    }
}

fn load_schedule(path: &std::path::Path) -> Result<Schedule> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read schedule file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("cannot parse schedule file {}", path.display()))
}

fn cmd_validate(schedule_path: &std::path::Path, problem_path: &std::path::Path) -> Result<u8> {
    let Problem { network, streams, .. } = load_problem(problem_path)?;
    let schedule = load_schedule(schedule_path)?;
    let violations = match check_schedule(&network, &streams, &schedule) {
        Ok(violations) => violations,
        Err(err @ (ValidateError::UnknownFrame(_) | ValidateError::UnknownWindow(..))) => {
            eprintln!("error: {err}");
            return Ok(EXIT_INPUT);
        }
        Err(err) => {
            eprintln!("error: {err}");
            return Ok(EXIT_INPUT);
        }
    };
    println!("{}", serde_json::to_string_pretty(&violations)?);
    if violations.is_empty() {
        Ok(0)
    } else {
        Ok(EXIT_FINDINGS)
    }
}

#[derive(Serialize)]
struct SimSummary<'a> {
    streams: &'a std::collections::BTreeMap<
        gatesched_core::netmodel::StreamId,
        gatesched_core::simulator::StreamStats,
    >,
    conformance_errors: &'a [String],
}

fn cmd_simulate(
    schedule_path: &std::path::Path,
    problem_path: &std::path::Path,
    duration: u32,
    seed: u64,
    loss: bool,
    trace_path: Option<&std::path::Path>,
) -> Result<u8> {
    let Problem { network, streams, encoder } = load_problem(problem_path)?;
    let schedule = load_schedule(schedule_path)?;

    let vertices: Vec<_> = network.vertices().cloned().collect();
    let offsets = offsets_from_seed(vertices.iter(), schedule.delta, seed);
    let mut config = SimConfig::new(duration).with_offsets(offsets, schedule.delta.max(encoder.delta));
    config.seed = seed;

    if loss {
        let report = match isolation_probe(&network, &streams, &schedule, &config) {
            Ok(report) => report,
            Err(err) => {
                eprintln!("error: {err}");
                return Ok(EXIT_INPUT);
            }
        };
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(if report.deterministic { 0 } else { EXIT_FINDINGS });
    }

    let trace = match simulate(&network, &streams, &schedule, &config) {
        Ok(trace) => trace,
        Err(err) => {
            eprintln!("error: {err}");
            return Ok(EXIT_INPUT);
        }
    };
    if let Some(path) = trace_path {
        std::fs::write(path, trace.events_jsonl())?;
    }
    let summary =
        SimSummary { streams: &trace.streams, conformance_errors: &trace.conformance_errors };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if trace.conformance_errors.is_empty() { 0 } else { EXIT_FINDINGS })
}

fn cmd_gantt(schedule_path: &std::path::Path) -> Result<u8> {
    let schedule = load_schedule(schedule_path)?;
    print!("{}", gantt::render(&schedule));
    Ok(0)
}
