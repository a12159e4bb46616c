//! SMT-LIB2 emission, external solver process driving, and model decoding.
//!
//! The solver runs as a child process fed the whole script on stdin
//! (one-shot, no incremental push/pop); `sat`/`unsat`/`unknown` plus the
//! `get-model` s-expressions are parsed from stdout.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::encoder::ir::{
    BoolExpr, ConstraintIr, IntExpr, ModelValue, Sort, VarRole,
};
use crate::netmodel::{FrameKey, LinkId, Nanos, PortModel};
use crate::schedule::{OrderingMode, PortSchedule, Schedule, Window};

/// Environment variable naming the default solver command line.
pub const SOLVER_ENV: &str = "GATESCHED_SOLVER";

/// Default solver invocation: z3 reading SMT-LIB2 from stdin.
pub const DEFAULT_SOLVER: &str = "z3 -in";

/// Solver command from the environment, or the z3 default.
pub fn default_solver_command() -> Vec<String> {
    let raw = std::env::var(SOLVER_ENV).unwrap_or_else(|_| DEFAULT_SOLVER.to_string());
    raw.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Logic {
    QfLia,
    QfNia,
}

impl Logic {
    pub fn name(&self) -> &'static str {
        match self {
            Logic::QfLia => "QF_LIA",
            Logic::QfNia => "QF_NIA",
        }
    }

    /// Logic needed by an IR: linear assertions fit QF_LIA, anything with a
    /// variable product needs QF_NIA.
    pub fn for_ir(ir: &ConstraintIr) -> Logic {
        if ir.is_linear() {
            Logic::QfLia
        } else {
            Logic::QfNia
        }
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("IR contains nonlinear assertions but QF_LIA was requested")]
    NonlinearUnderLia,
}

#[derive(Debug, Clone, Default)]
pub struct EmitOptions {
    /// Emit a `(minimize ...)` directive for the objective (OMT dialect).
    /// When false the objective is left out and must be driven by
    /// bound-probing instead.
    pub optimization_dialect: bool,
    /// Extra assertions appended after the IR body (bound probes, pinning).
    pub extra_assertions: Vec<BoolExpr>,
}

fn push_int(out: &mut String, ir: &ConstraintIr, expr: &IntExpr) {
    match expr {
        IntExpr::Const(c) => {
            if *c < 0 {
                out.push_str(&format!("(- {})", -c));
            } else {
                out.push_str(&c.to_string());
            }
        }
        IntExpr::Var(id) => out.push_str(ir.name(*id)),
        IntExpr::Add(xs) => push_nary(out, ir, "+", xs, "0"),
        IntExpr::Mul(xs) => push_nary(out, ir, "*", xs, "1"),
    }
}

fn push_nary(out: &mut String, ir: &ConstraintIr, op: &str, xs: &[IntExpr], empty: &str) {
    match xs.len() {
        0 => out.push_str(empty),
        1 => push_int(out, ir, &xs[0]),
        _ => {
            out.push('(');
            out.push_str(op);
            for x in xs {
                out.push(' ');
                push_int(out, ir, x);
            }
            out.push(')');
        }
    }
}

fn push_bool(out: &mut String, ir: &ConstraintIr, expr: &BoolExpr) {
    match expr {
        BoolExpr::Const(b) => out.push_str(if *b { "true" } else { "false" }),
        BoolExpr::Var(id) => out.push_str(ir.name(*id)),
        BoolExpr::Le(a, b) => push_cmp(out, ir, "<=", a, b),
        BoolExpr::Lt(a, b) => push_cmp(out, ir, "<", a, b),
        BoolExpr::Eq(a, b) => push_cmp(out, ir, "=", a, b),
        BoolExpr::And(xs) => push_connective(out, ir, "and", xs),
        BoolExpr::Or(xs) => push_connective(out, ir, "or", xs),
        BoolExpr::Not(x) => {
            out.push_str("(not ");
            push_bool(out, ir, x);
            out.push(')');
        }
    }
}

fn push_cmp(out: &mut String, ir: &ConstraintIr, op: &str, a: &IntExpr, b: &IntExpr) {
    out.push('(');
    out.push_str(op);
    out.push(' ');
    push_int(out, ir, a);
    out.push(' ');
    push_int(out, ir, b);
    out.push(')');
}

fn push_connective(out: &mut String, ir: &ConstraintIr, op: &str, xs: &[BoolExpr]) {
    match xs.len() {
        0 => out.push_str(if op == "and" { "true" } else { "false" }),
        1 => push_bool(out, ir, &xs[0]),
        _ => {
            out.push('(');
            out.push_str(op);
            for x in xs {
                out.push(' ');
                push_bool(out, ir, x);
            }
            out.push(')');
        }
    }
}

/// Serializes the IR as an SMT-LIB2 script. Output is deterministic:
/// identical IR yields identical bytes.
pub fn emit_smtlib(ir: &ConstraintIr, logic: Logic, opts: &EmitOptions) -> Result<String, EmitError> {
    if logic == Logic::QfLia && !ir.is_linear() {
        return Err(EmitError::NonlinearUnderLia);
    }
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    out.push_str(&format!("(set-logic {})\n", logic.name()));
    for var in ir.vars() {
        let sort = match var.sort {
            Sort::Int => "Int",
            Sort::Bool => "Bool",
        };
        out.push_str(&format!("(declare-fun {} () {})\n", var.name, sort));
    }
    for assertion in &ir.assertions {
        out.push_str("(assert ");
        push_bool(&mut out, ir, &assertion.expr);
        out.push_str(")\n");
    }
    for extra in &opts.extra_assertions {
        out.push_str("(assert ");
        push_bool(&mut out, ir, extra);
        out.push_str(")\n");
    }
    if opts.optimization_dialect {
        if let Some(objective) = &ir.objective {
            out.push_str("(minimize ");
            push_int(&mut out, ir, &objective.expr);
            out.push_str(")\n");
        }
    }
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    SolverError(String),
}

#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub wall: Duration,
    pub assertions: usize,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub model: Option<BTreeMap<String, ModelValue>>,
    pub objective_value: Option<i64>,
    pub stats: SolverStats,
}

impl SolverResult {
    fn errored(message: impl Into<String>, wall: Duration) -> SolverResult {
        SolverResult {
            status: SolverStatus::SolverError(message.into()),
            model: None,
            objective_value: None,
            stats: SolverStats { wall, assertions: 0 },
        }
    }

    pub fn is_sat(&self) -> bool {
        self.status == SolverStatus::Sat
    }
}

/// Runs `command` with the script on stdin, killing it at the deadline.
pub fn run_solver(document: &str, command: &[String], timeout: Duration) -> SolverResult {
    let started = Instant::now();
    let assertions = document.matches("(assert ").count();
    if command.is_empty() {
        return SolverResult::errored("empty solver command", started.elapsed());
    }
    let mut child = match Command::new(&command[0])
        .args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(child) => child,
        Err(err) => {
            return SolverResult::errored(
                format!("failed to spawn `{}`: {err}", command[0]),
                started.elapsed(),
            )
        }
    };

    let mut stdin = child.stdin.take().expect("piped stdin");
    let doc = document.as_bytes().to_vec();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(&doc);
        // dropping stdin closes the pipe
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let out_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        use std::io::Read;
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        use std::io::Read;
        let _ = stderr.read_to_string(&mut buf);
        buf
    });

    let deadline = started + timeout;
    let timed_out = loop {
        match child.try_wait() {
            Ok(Some(_)) => break false,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    break true;
                }
                std::thread::sleep(Duration::from_millis(1));
            }
            Err(err) => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = writer.join();
                let _ = out_reader.join();
                let _ = err_reader.join();
                return SolverResult::errored(
                    format!("waiting for solver failed: {err}"),
                    started.elapsed(),
                );
            }
        }
    };
    let _ = writer.join();
    let stdout_text = out_reader.join().unwrap_or_default();
    let stderr_text = err_reader.join().unwrap_or_default();
    let wall = started.elapsed();

    if timed_out {
        return SolverResult {
            status: SolverStatus::Timeout,
            model: None,
            objective_value: None,
            stats: SolverStats { wall, assertions },
        };
    }

    let mut result = parse_solver_output(&stdout_text, &stderr_text, wall);
    result.stats.assertions = assertions;
    result
}

fn parse_solver_output(stdout: &str, stderr: &str, wall: Duration) -> SolverResult {
    let mut status = None;
    let mut rest_offset = 0;
    for line in stdout.lines() {
        rest_offset += line.len() + 1;
        let word = line.trim();
        if word.is_empty() {
            continue;
        }
        status = match word {
            "sat" => Some(SolverStatus::Sat),
            "unsat" => Some(SolverStatus::Unsat),
            "unknown" | "timeout" => Some(SolverStatus::Unknown),
            other => Some(SolverStatus::SolverError(format!(
                "unrecognized solver verdict `{other}`; stderr: {}",
                stderr.trim()
            ))),
        };
        break;
    }
    let Some(status) = status else {
        return SolverResult::errored(
            format!("solver produced no verdict; stderr: {}", stderr.trim()),
            wall,
        );
    };
    let model = if status == SolverStatus::Sat {
        match parse_model(&stdout[rest_offset.min(stdout.len())..]) {
            Ok(model) => Some(model),
            Err(err) => {
                return SolverResult::errored(format!("failed to parse model: {err}"), wall)
            }
        }
    } else {
        None
    };
    SolverResult { status, model, objective_value: None, stats: SolverStats { wall, assertions: 0 } }
}

#[derive(Debug, PartialEq)]
enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            }
            ';' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                // string literal: skip to closing quote
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                let mut s = String::from("\"");
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '"' {
                        break;
                    }
                }
                tokens.push(s);
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn parse_sexprs(tokens: &[String]) -> Result<Vec<SExpr>, String> {
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    for token in tokens {
        match token.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let list = stack.pop().ok_or("unbalanced ')'")?;
                stack
                    .last_mut()
                    .ok_or("unbalanced ')'")?
                    .push(SExpr::List(list));
            }
            atom => stack
                .last_mut()
                .expect("stack never empty here")
                .push(SExpr::Atom(atom.to_string())),
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced '('".to_string());
    }
    Ok(stack.pop().unwrap())
}

fn parse_value(expr: &SExpr) -> Option<ModelValue> {
    match expr {
        SExpr::Atom(a) => match a.as_str() {
            "true" => Some(ModelValue::Bool(true)),
            "false" => Some(ModelValue::Bool(false)),
            num => num.parse::<i64>().ok().map(ModelValue::Int),
        },
        SExpr::List(items) => {
            // negative integers print as (- N)
            if items.len() == 2 {
                if let (SExpr::Atom(op), SExpr::Atom(num)) = (&items[0], &items[1]) {
                    if op == "-" {
                        return num.parse::<i64>().ok().map(|v| ModelValue::Int(-v));
                    }
                }
            }
            None
        }
    }
}

/// Extracts `define-fun` name/value pairs from `get-model` output.
fn parse_model(text: &str) -> Result<BTreeMap<String, ModelValue>, String> {
    let tokens = tokenize(text);
    let sexprs = parse_sexprs(&tokens)?;
    let mut model = BTreeMap::new();
    fn walk(expr: &SExpr, model: &mut BTreeMap<String, ModelValue>) {
        if let SExpr::List(items) = expr {
            if items.len() >= 5 {
                if let (SExpr::Atom(head), SExpr::Atom(name)) = (&items[0], &items[1]) {
                    if head == "define-fun" {
                        if let Some(value) = parse_value(&items[items.len() - 1]) {
                            model.insert(name.clone(), value);
                        }
                        return;
                    }
                }
            }
            for item in items {
                walk(item, model);
            }
        }
    }
    for expr in &sexprs {
        walk(expr, &mut model);
    }
    Ok(model)
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("result is not sat")]
    NotSat,
    #[error("model is missing variable `{0}`")]
    MissingVariable(String),
    #[error("model value for `{0}` has the wrong sort")]
    WrongSort(String),
    #[error("frame {0:?} is assigned to {1} windows (expected exactly 1)")]
    BadAssignment(FrameKey, usize),
    #[error("objective evaluation failed: {0}")]
    Objective(String),
}

/// Decoding context: encoding parameters the schedule must remember.
#[derive(Debug, Clone, Copy)]
pub struct DecodeContext {
    pub delta: Nanos,
    pub ordering: OrderingMode,
    pub multi_period: bool,
}

/// Rebuilds concrete port schedules and the assignment map from a sat model.
pub fn decode_model(
    result: &SolverResult,
    ir: &ConstraintIr,
    ports: &BTreeMap<LinkId, PortModel>,
    ctx: DecodeContext,
) -> Result<Schedule, DecodeError> {
    if result.status != SolverStatus::Sat {
        return Err(DecodeError::NotSat);
    }
    let model = result.model.as_ref().ok_or(DecodeError::NotSat)?;
    let int_value = |name: &str| -> Result<i64, DecodeError> {
        let value = model
            .get(name)
            .ok_or_else(|| DecodeError::MissingVariable(name.to_string()))?;
        value.as_int().ok_or_else(|| DecodeError::WrongSort(name.to_string()))
    };

    let mut opens: BTreeMap<(LinkId, u32), Nanos> = BTreeMap::new();
    let mut closes: BTreeMap<(LinkId, u32), Nanos> = BTreeMap::new();
    let mut assignment: BTreeMap<FrameKey, Vec<u32>> = BTreeMap::new();
    for var in ir.vars() {
        match &var.role {
            Some(VarRole::WindowOpen { link, window }) => {
                opens.insert((link.clone(), *window), int_value(&var.name)?);
            }
            Some(VarRole::WindowClose { link, window }) => {
                closes.insert((link.clone(), *window), int_value(&var.name)?);
            }
            Some(VarRole::Epsilon { window, frame })
                if int_value(&var.name)? == 1 => {
                    assignment.entry(frame.clone()).or_default().push(*window);
                }
            _ => {}
        }
    }

    let mut port_schedules = BTreeMap::new();
    for (link, port) in ports {
        let mut windows = Vec::new();
        for k in 1..=port.wmax {
            let open = *opens
                .get(&(link.clone(), k))
                .ok_or_else(|| DecodeError::MissingVariable(format!("{link} window {k} open")))?;
            let close = *closes
                .get(&(link.clone(), k))
                .ok_or_else(|| DecodeError::MissingVariable(format!("{link} window {k} close")))?;
            windows.push(Window { index: k, open, close });
        }
        port_schedules.insert(
            link.clone(),
            PortSchedule { link: link.clone(), hyperperiod: port.hyperperiod, windows },
        );
    }

    let mut flat = BTreeMap::new();
    for port in ports.values() {
        for frame in &port.frames {
            let windows = assignment.remove(&frame.key).unwrap_or_default();
            if windows.len() != 1 {
                return Err(DecodeError::BadAssignment(frame.key.clone(), windows.len()));
            }
            flat.insert(frame.key.clone(), windows[0]);
        }
    }

    let objective_value = match &ir.objective {
        Some(objective) => Some(
            ir.eval_int(&objective.expr, model)
                .map_err(|e| DecodeError::Objective(e.to_string()))?,
        ),
        None => None,
    };

    Ok(Schedule {
        delta: ctx.delta,
        ordering: ctx.ordering,
        multi_period: ctx.multi_period,
        ports: port_schedules,
        assignment: flat,
        objective_value,
    })
}

/// Objective minimization by bound probing: plain check-sat search over
/// `objective <= B`, shrinking B until the bound is exact.
pub fn optimize_by_bisection(
    ir: &ConstraintIr,
    logic: Logic,
    command: &[String],
    timeout: Duration,
) -> Result<BisectionOutcome, EmitError> {
    let objective = ir.objective.as_ref().expect("bisection requires an objective");

    let probe = |bound: Option<i64>| -> Result<SolverResult, EmitError> {
        let mut opts = EmitOptions::default();
        if let Some(b) = bound {
            opts.extra_assertions
                .push(BoolExpr::Le(objective.expr.clone(), IntExpr::Const(b)));
        }
        let doc = emit_smtlib(ir, logic, &opts)?;
        Ok(run_solver(&doc, command, timeout))
    };

    // Establish feasibility and a first objective value.
    let first = probe(None)?;
    let mut best = match first.status {
        SolverStatus::Sat => first,
        _ => return Ok(BisectionOutcome { result: first, optimal: false, probes: 1 }),
    };
    let mut probes = 1usize;
    let value = |result: &SolverResult| -> i64 {
        let model = result.model.as_ref().expect("sat result has model");
        ir.eval_int(&objective.expr, model).expect("objective evaluates over own model")
    };
    let mut high = value(&best);
    let mut low = 0i64;
    let mut optimal = true;
    while low < high {
        let mid = low + (high - low) / 2;
        let result = probe(Some(mid))?;
        probes += 1;
        match result.status {
            SolverStatus::Sat => {
                high = value(&result);
                best = result;
            }
            SolverStatus::Unsat => {
                low = mid + 1;
            }
            _ => {
                optimal = false;
                break;
            }
        }
    }
    best.objective_value = Some(high);
    Ok(BisectionOutcome { result: best, optimal, probes })
}

#[derive(Debug)]
pub struct BisectionOutcome {
    pub result: SolverResult,
    /// False when a probe timed out and the best-so-far model is returned.
    pub optimal: bool,
    pub probes: usize,
}
