//! Deciding constraints: a polynomial coefficient check, an external
//! SMT-LIB solver and a sampling falsifier, combined into three-valued
//! verdicts.

mod falsify;
mod pipeline;
mod poly;
mod smtlib;
mod solver;

use std::fmt;

use crate::semantics::Valuation;

pub use falsify::{confirm_witness, falsify, falsify_obligation, lower_bound_probes, DEFAULT_BUDGET};
pub use pipeline::{
    check_constraints, check_task, check_tasks, lower, overall, piece_formula, CheckConfig, Decision, Task, TaskResult,
};
pub use poly::{dominates, dominates_finite, poly_dominate, Monomial, Poly, PolyVerdict};
pub use smtlib::{emit_query, emit_smtlib, symbol, Declared};
pub use solver::{solve, solve_named, SolverConfig, DEFAULT_SOLVER, SOLVER_ENV};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnknownReason {
    Timeout,
    SolverUnknown,
    IncompleteInternalCheck,
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnknownReason::Timeout => "timeout",
            UnknownReason::SolverUnknown => "solver-unknown",
            UnknownReason::IncompleteInternalCheck => "incomplete-internal-check",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Valid,
    /// A valuation under which the left side is smaller than the right.
    Invalid(Valuation),
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::Invalid(_) => "invalid",
            Verdict::Unknown(_) => "unknown",
        }
    }

    pub fn witness(&self) -> Option<&Valuation> {
        match self {
            Verdict::Invalid(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("valid"),
            Verdict::Invalid(w) => write!(f, "invalid, witness {w}"),
            Verdict::Unknown(r) => write!(f, "unknown ({r})"),
        }
    }
}
