//! Solver-agnostic constraint intermediate representation.
//!
//! Assertions are boolean expressions over integer terms built from `+`, `*`,
//! comparisons and boolean connectives. Frame-assignment variables are
//! integers restricted to {0,1} so the nonlinear encoding can multiply them
//! into terms the way the constraint formulas are written.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::netmodel::{FrameKey, LinkId, Nanos, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sort {
    Int,
    Bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) u32);

/// What a variable stands for; drives model decoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarRole {
    /// Gate-open time of window k on a link.
    WindowOpen { link: LinkId, window: u32 },
    /// Gate-close time of window k on a link.
    WindowClose { link: LinkId, window: u32 },
    /// Frame-to-window assignment bit (0/1).
    Epsilon { window: u32, frame: FrameKey },
    /// Per-stream latency term used for linear objectives.
    LatencyAux { stream: StreamId, slot: u32 },
    /// Per-stream last-hop window size used for linear objectives.
    JitterAux { stream: StreamId },
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub sort: Sort,
    pub role: Option<VarRole>,
}

/// Constraint families, used for reporting and structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintCategory {
    WellDefined,
    Ordering,
    Assignment,
    WindowSize,
    Precedence,
    Isolation,
    EndToEnd,
    Jitter,
    MultiPeriod,
    SymmetryBreak,
    Objective,
}

impl ConstraintCategory {
    pub const ALL: [ConstraintCategory; 11] = [
        ConstraintCategory::WellDefined,
        ConstraintCategory::Ordering,
        ConstraintCategory::Assignment,
        ConstraintCategory::WindowSize,
        ConstraintCategory::Precedence,
        ConstraintCategory::Isolation,
        ConstraintCategory::EndToEnd,
        ConstraintCategory::Jitter,
        ConstraintCategory::MultiPeriod,
        ConstraintCategory::SymmetryBreak,
        ConstraintCategory::Objective,
    ];
}

impl fmt::Display for ConstraintCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConstraintCategory::WellDefined => "well_defined",
            ConstraintCategory::Ordering => "ordering",
            ConstraintCategory::Assignment => "assignment",
            ConstraintCategory::WindowSize => "window_size",
            ConstraintCategory::Precedence => "precedence",
            ConstraintCategory::Isolation => "isolation",
            ConstraintCategory::EndToEnd => "e2e",
            ConstraintCategory::Jitter => "jitter",
            ConstraintCategory::MultiPeriod => "multi_period",
            ConstraintCategory::SymmetryBreak => "symmetry_break",
            ConstraintCategory::Objective => "objective",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntExpr {
    Const(Nanos),
    Var(VarId),
    Add(Vec<IntExpr>),
    Mul(Vec<IntExpr>),
}

impl IntExpr {
    pub fn zero() -> IntExpr {
        IntExpr::Const(0)
    }

    pub fn plus(self, other: IntExpr) -> IntExpr {
        match (self, other) {
            (IntExpr::Add(mut xs), IntExpr::Add(ys)) => {
                xs.extend(ys);
                IntExpr::Add(xs)
            }
            (IntExpr::Add(mut xs), y) => {
                xs.push(y);
                IntExpr::Add(xs)
            }
            (x, IntExpr::Add(mut ys)) => {
                ys.insert(0, x);
                IntExpr::Add(ys)
            }
            (x, y) => IntExpr::Add(vec![x, y]),
        }
    }

    pub fn plus_const(self, c: Nanos) -> IntExpr {
        if c == 0 {
            self
        } else {
            self.plus(IntExpr::Const(c))
        }
    }

    pub fn times(self, other: IntExpr) -> IntExpr {
        IntExpr::Mul(vec![self, other])
    }

    pub fn sum(terms: Vec<IntExpr>) -> IntExpr {
        match terms.len() {
            0 => IntExpr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => IntExpr::Add(terms),
        }
    }

    /// Polynomial degree in the declared variables; linear means <= 1.
    pub fn degree(&self) -> u32 {
        match self {
            IntExpr::Const(_) => 0,
            IntExpr::Var(_) => 1,
            IntExpr::Add(xs) => xs.iter().map(IntExpr::degree).max().unwrap_or(0),
            IntExpr::Mul(xs) => xs.iter().map(IntExpr::degree).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Var(VarId),
    Le(IntExpr, IntExpr),
    Lt(IntExpr, IntExpr),
    Eq(IntExpr, IntExpr),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Not(Box<BoolExpr>),
}

impl BoolExpr {
    pub fn or(terms: Vec<BoolExpr>) -> BoolExpr {
        match terms.len() {
            0 => BoolExpr::Const(false),
            1 => terms.into_iter().next().unwrap(),
            _ => BoolExpr::Or(terms),
        }
    }

    pub fn and(terms: Vec<BoolExpr>) -> BoolExpr {
        match terms.len() {
            0 => BoolExpr::Const(true),
            1 => terms.into_iter().next().unwrap(),
            _ => BoolExpr::And(terms),
        }
    }

    /// `guards /\ ... => body` written as a disjunction.
    pub fn guarded(guards: Vec<BoolExpr>, body: BoolExpr) -> BoolExpr {
        let mut terms: Vec<BoolExpr> =
            guards.into_iter().map(|g| BoolExpr::Not(Box::new(g))).collect();
        terms.push(body);
        BoolExpr::or(terms)
    }

    pub fn max_degree(&self) -> u32 {
        match self {
            BoolExpr::Const(_) | BoolExpr::Var(_) => 0,
            BoolExpr::Le(a, b) | BoolExpr::Lt(a, b) | BoolExpr::Eq(a, b) => {
                a.degree().max(b.degree())
            }
            BoolExpr::And(xs) | BoolExpr::Or(xs) => {
                xs.iter().map(BoolExpr::max_degree).max().unwrap_or(0)
            }
            BoolExpr::Not(x) => x.max_degree(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelValue {
    Int(i64),
    Bool(bool),
}

impl ModelValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ModelValue::Int(v) => Some(*v),
            ModelValue::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ModelValue::Bool(v) => Some(*v),
            ModelValue::Int(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Assertion {
    pub category: ConstraintCategory,
    pub expr: BoolExpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
}

#[derive(Debug, Clone)]
pub struct Objective {
    pub expr: IntExpr,
    pub direction: Direction,
}

/// The assertion set handed to the solver backend.
#[derive(Debug, Clone, Default)]
pub struct ConstraintIr {
    vars: Vec<VarDecl>,
    by_name: BTreeMap<String, VarId>,
    pub assertions: Vec<Assertion>,
    pub objective: Option<Objective>,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("model has no value for variable `{0}`")]
    MissingValue(String),
    #[error("model value for `{0}` has the wrong sort")]
    WrongSort(String),
}

impl ConstraintIr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<String>, sort: Sort, role: Option<VarRole>) -> VarId {
        let name = name.into();
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate variable declaration: {name}"
        );
        let id = VarId(self.vars.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.vars.push(VarDecl { name, sort, role });
        id
    }

    pub fn assert(&mut self, category: ConstraintCategory, expr: BoolExpr) {
        self.assertions.push(Assertion { category, expr });
    }

    pub fn set_objective(&mut self, expr: IntExpr) {
        self.objective = Some(Objective { expr, direction: Direction::Minimize });
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &VarDecl {
        &self.vars[id.0 as usize]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id.0 as usize].name
    }

    /// True when no assertion (or objective) multiplies variables together.
    pub fn is_linear(&self) -> bool {
        self.assertions.iter().all(|a| a.expr.max_degree() <= 1)
            && self.objective.as_ref().is_none_or(|o| o.expr.degree() <= 1)
    }

    /// Assertion totals per constraint family, with zero entries included.
    pub fn assertion_count(&self) -> BTreeMap<ConstraintCategory, usize> {
        let mut counts: BTreeMap<ConstraintCategory, usize> =
            ConstraintCategory::ALL.iter().map(|c| (*c, 0)).collect();
        for a in &self.assertions {
            *counts.get_mut(&a.category).unwrap() += 1;
        }
        counts
    }

    pub fn eval_int(
        &self,
        expr: &IntExpr,
        model: &BTreeMap<String, ModelValue>,
    ) -> Result<i64, EvalError> {
        Ok(match expr {
            IntExpr::Const(c) => *c,
            IntExpr::Var(id) => {
                let name = self.name(*id);
                let value = model
                    .get(name)
                    .ok_or_else(|| EvalError::MissingValue(name.to_string()))?;
                value.as_int().ok_or_else(|| EvalError::WrongSort(name.to_string()))?
            }
            IntExpr::Add(xs) => {
                let mut acc = 0i64;
                for x in xs {
                    acc += self.eval_int(x, model)?;
                }
                acc
            }
            IntExpr::Mul(xs) => {
                let mut acc = 1i64;
                for x in xs {
                    acc *= self.eval_int(x, model)?;
                }
                acc
            }
        })
    }

    pub fn eval_bool(
        &self,
        expr: &BoolExpr,
        model: &BTreeMap<String, ModelValue>,
    ) -> Result<bool, EvalError> {
        Ok(match expr {
            BoolExpr::Const(b) => *b,
            BoolExpr::Var(id) => {
                let name = self.name(*id);
                let value = model
                    .get(name)
                    .ok_or_else(|| EvalError::MissingValue(name.to_string()))?;
                value.as_bool().ok_or_else(|| EvalError::WrongSort(name.to_string()))?
            }
            BoolExpr::Le(a, b) => self.eval_int(a, model)? <= self.eval_int(b, model)?,
            BoolExpr::Lt(a, b) => self.eval_int(a, model)? < self.eval_int(b, model)?,
            BoolExpr::Eq(a, b) => self.eval_int(a, model)? == self.eval_int(b, model)?,
            BoolExpr::And(xs) => {
                for x in xs {
                    if !self.eval_bool(x, model)? {
                        return Ok(false);
                    }
                }
                true
            }
            BoolExpr::Or(xs) => {
                for x in xs {
                    if self.eval_bool(x, model)? {
                        return Ok(true);
                    }
                }
                false
            }
            BoolExpr::Not(x) => !self.eval_bool(x, model)?,
        })
    }

    /// Re-evaluates every assertion under a model; returns the categories of
    /// any that do not hold. Used by round-trip and cross-mode tests.
    pub fn violated_assertions(
        &self,
        model: &BTreeMap<String, ModelValue>,
    ) -> Result<Vec<ConstraintCategory>, EvalError> {
        let mut out = Vec::new();
        for a in &self.assertions {
            if !self.eval_bool(&a.expr, model)? {
                out.push(a.category);
            }
        }
        Ok(out)
    }
}
