//! End-to-end synthesis: encode, solve, decode, validate.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::encoder::ir::ConstraintCategory;
use crate::encoder::{encode, EncodeError, EncoderConfig};
use crate::netmodel::{build_port_models, e2e_floor, ModelError, Network, Stream};
use crate::schedule::{ObjectiveKind, Schedule};
use crate::smtlib::{
    decode_model, default_solver_command, emit_smtlib, optimize_by_bisection, run_solver,
    DecodeContext, DecodeError, EmitError, EmitOptions, Logic, SolverStatus,
};
use crate::validator::{check_schedule, ValidateError, Violation};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Solver argv; the SMT-LIB2 script is fed on stdin.
    pub command: Vec<String>,
    pub timeout: Duration,
    /// Persist the emitted script here for auditing.
    pub emit_path: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: default_solver_command(),
            timeout: Duration::from_secs(60),
            emit_path: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error("failed to write emitted script: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything a caller needs to act on a synthesis run.
#[derive(Debug)]
pub struct SynthesisReport {
    pub status: SolverStatus,
    pub schedule: Option<Schedule>,
    /// Validator findings on the decoded schedule; must be empty for a
    /// trustworthy result.
    pub violations: Vec<Violation>,
    pub wall: Duration,
    pub objective_value: Option<i64>,
    /// For objective runs: whether the bound search proved optimality.
    pub optimal: Option<bool>,
    /// Pre-flight feasibility warnings (e2e bounds below the path floor).
    pub warnings: Vec<String>,
    pub assertion_counts: BTreeMap<ConstraintCategory, usize>,
}

impl SynthesisReport {
    pub fn validated_sat(&self) -> bool {
        self.status == SolverStatus::Sat
            && self.schedule.is_some()
            && self.violations.is_empty()
    }
}

/// Runs the full synthesis pipeline on a typed problem.
#[allow(clippy::result_large_err)]
pub fn synthesize(
    network: &Network,
    streams: &[Stream],
    enc_cfg: &EncoderConfig,
    solver_cfg: &SolverConfig,
) -> Result<SynthesisReport, PipelineError> {
    let mut warnings = Vec::new();
    for stream in streams {
        if let Some(floor) = e2e_floor(stream, network, enc_cfg.delta) {
            if stream.e2e < floor {
                warnings.push(format!(
                    "stream `{}`: e2e bound {} is below the path floor {}; expect unsat",
                    stream.id, stream.e2e, floor
                ));
            }
        }
    }

    let ports = build_port_models(network, streams)?;
    let ir = encode(streams, &ports, enc_cfg.clone())?;
    let assertion_counts = ir.assertion_count();
    let logic = Logic::for_ir(&ir);

    if let Some(path) = &solver_cfg.emit_path {
        let doc = emit_smtlib(&ir, logic, &EmitOptions::default())?;
        std::fs::write(path, doc)?;
    }

    let (result, optimal) = if enc_cfg.objective != ObjectiveKind::None {
        let outcome =
            optimize_by_bisection(&ir, logic, &solver_cfg.command, solver_cfg.timeout)?;
        (outcome.result, Some(outcome.optimal))
    } else {
        let doc = emit_smtlib(&ir, logic, &EmitOptions::default())?;
        (run_solver(&doc, &solver_cfg.command, solver_cfg.timeout), None)
    };

    let mut report = SynthesisReport {
        status: result.status.clone(),
        schedule: None,
        violations: Vec::new(),
        wall: result.stats.wall,
        objective_value: result.objective_value,
        optimal,
        warnings,
        assertion_counts,
    };

    if result.status == SolverStatus::Sat {
        let ctx = DecodeContext {
            delta: enc_cfg.delta,
            ordering: enc_cfg.ordering,
            multi_period: enc_cfg.multi_period,
        };
        let schedule = decode_model(&result, &ir, &ports, ctx)?;
        report.objective_value = schedule.objective_value.or(report.objective_value);
        report.violations = check_schedule(network, streams, &schedule)?;
        report.schedule = Some(schedule);
    }
    Ok(report)
}
