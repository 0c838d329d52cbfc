use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::falsify::{confirm_witness, falsify, DEFAULT_BUDGET};
use super::poly::{dominates_finite, PolyVerdict};
use super::solver::{solve_named, SolverConfig};
use super::{UnknownReason, Verdict};
use crate::constraints::{
    refinements_formula, simplify, split_infinity, translate, translate_uniform, universal_formula, Formula, InfOutcome,
    Mode, Sort,
};
use crate::constraints::sort_of;
use crate::semantics::{ExtReal, Valuation};
use crate::typing::{Constraint, Origin};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub mode: Mode,
    /// Use the club pipeline; otherwise translate constraints directly.
    pub simplify: bool,
    /// External solver; `None` leaves only the internal checks.
    pub solver: Option<SolverConfig>,
    pub falsify_budget: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            mode: Mode::Mixed,
            simplify: true,
            solver: Some(SolverConfig::default()),
            falsify_budget: DEFAULT_BUDGET,
            seed: 0x5eed,
            jobs: 1,
        }
    }
}

/// One unit of work: a constraint checked on its own.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub origin: Origin,
    pub constraint: Constraint,
    /// Checked through the direct translation rather than as an obligation.
    pub direct: bool,
}

/// What settled a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    /// Constant folding of `∞` alone.
    Infinity,
    Polynomial,
    Solver,
    Falsifier,
    Undecided,
}

impl Decision {
    pub fn label(self) -> &'static str {
        match self {
            Decision::Infinity => "infinity",
            Decision::Polynomial => "polynomial",
            Decision::Solver => "solver",
            Decision::Falsifier => "falsifier",
            Decision::Undecided => "undecided",
        }
    }

    fn rank(self) -> u8 {
        match self {
            Decision::Infinity => 0,
            Decision::Polynomial => 1,
            Decision::Solver => 2,
            Decision::Falsifier => 3,
            Decision::Undecided => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskResult {
    pub task: Task,
    pub verdict: Verdict,
    pub decided_by: Decision,
    pub millis: u128,
}

/// Turns typing constraints into tasks. With `simplify`, each constraint with
/// a standard left side becomes one task per obligation; the rest are
/// checked directly.
pub fn lower(constraints: &[Constraint], simplify_on: bool) -> Vec<Task> {
    let mut out = Vec::new();
    for c in constraints {
        if simplify_on && c.lhs.is_standard() {
            for o in simplify(c).obligations {
                out.push(Task {
                    origin: c.origin.clone(),
                    constraint: o.as_constraint(&c.origin),
                    direct: false,
                });
            }
        } else {
            out.push(Task {
                origin: c.origin.clone(),
                constraint: c.clone(),
                direct: true,
            });
        }
    }
    out
}

/// The formula handed to the solver for a finite piece.
pub fn piece_formula(c: &Constraint, direct: bool, mode: Mode) -> Option<Formula> {
    if !direct {
        return universal_formula(c, mode).ok();
    }
    match mode {
        Mode::Mixed => translate(c).ok(),
        Mode::Uniform => translate_uniform(c).ok(),
    }
}

fn unsat_refinements_formula(c: &Constraint, mode: Mode) -> Option<Formula> {
    let phi = refinements_formula(&c.refinements)?;
    let vars: Vec<(String, Sort)> = c.idx_env.iter().map(|(n, k)| (n.to_string(), sort_of(k, mode))).collect();
    Some(Formula::forall_many(&vars, Formula::implies(phi, Formula::False)))
}

fn extend(w: &Valuation, at_infinity: &[String]) -> Valuation {
    let mut w = w.clone();
    for v in at_infinity {
        w.set(v, ExtReal::Infinity);
    }
    w
}

enum PieceResult {
    Valid(Decision),
    Invalid(Valuation, Decision),
    Unknown(UnknownReason),
}

/// Checks one task: `∞`-split, then the polynomial check, the solver and the
/// falsifier on each piece. A witness is reported only after it has been
/// re-evaluated against the task's constraint.
pub fn check_task(task: &Task, cfg: &CheckConfig, name: &str) -> (Verdict, Decision) {
    let c = &task.constraint;
    let Some(pieces) = split_infinity(c, cfg.mode) else {
        return (Verdict::Unknown(UnknownReason::IncompleteInternalCheck), Decision::Undecided);
    };
    let mut worst = Decision::Infinity;
    let mut unknown: Option<UnknownReason> = None;
    for (k, piece) in pieces.iter().enumerate() {
        let label = format!("{name}-{k}");
        let r = match &piece.outcome {
            InfOutcome::Valid => PieceResult::Valid(Decision::Infinity),
            InfOutcome::RhsInfinite(p) => check_rhs_infinite(c, p, &piece.at_infinity, cfg, &label),
            InfOutcome::Finite(p) => check_finite(c, p, &piece.at_infinity, task.direct, cfg, &label),
        };
        match r {
            PieceResult::Valid(d) => {
                if d.rank() > worst.rank() {
                    worst = d;
                }
            }
            PieceResult::Invalid(w, d) => return (Verdict::Invalid(w), d),
            PieceResult::Unknown(reason) => {
                unknown.get_or_insert(reason);
            }
        }
    }
    match unknown {
        Some(reason) => (Verdict::Unknown(reason), Decision::Undecided),
        None => (Verdict::Valid, worst),
    }
}

/// Falsifier budget used to look for a small witness once the solver has
/// found one.
const SHRINK_BUDGET: usize = 512;

fn try_falsify(
    orig: &Constraint,
    piece: &Constraint,
    at_inf: &[String],
    budget: usize,
    cfg: &CheckConfig,
) -> Option<Valuation> {
    let w = falsify(piece, cfg.mode, budget, cfg.seed)?;
    let w = extend(&w, at_inf);
    confirm_witness(orig, &w, cfg.mode).then_some(w)
}

fn check_rhs_infinite(
    orig: &Constraint,
    piece: &Constraint,
    at_inf: &[String],
    cfg: &CheckConfig,
    label: &str,
) -> PieceResult {
    let mut reason = UnknownReason::IncompleteInternalCheck;
    if !piece.refinements.is_empty() {
        if let (Some(solver), Some(f)) = (&cfg.solver, unsat_refinements_formula(piece, cfg.mode)) {
            match solve_named(&f, solver, label) {
                Verdict::Valid => return PieceResult::Valid(Decision::Solver),
                Verdict::Invalid(_) => {}
                Verdict::Unknown(r) => reason = r,
            }
        }
    }
    match try_falsify(orig, piece, at_inf, cfg.falsify_budget, cfg) {
        Some(w) => PieceResult::Invalid(w, Decision::Falsifier),
        None => PieceResult::Unknown(reason),
    }
}

fn check_finite(
    orig: &Constraint,
    piece: &Constraint,
    at_inf: &[String],
    direct: bool,
    cfg: &CheckConfig,
    label: &str,
) -> PieceResult {
    if piece.lhs.is_standard() && piece.rhs.is_standard() && dominates_finite(piece) == PolyVerdict::Valid {
        return PieceResult::Valid(Decision::Polynomial);
    }
    let mut reason = UnknownReason::IncompleteInternalCheck;
    if let Some(solver) = &cfg.solver {
        match piece_formula(piece, direct, cfg.mode) {
            Some(f) => match solve_named(&f, solver, label) {
                Verdict::Valid => return PieceResult::Valid(Decision::Solver),
                Verdict::Invalid(w) => {
                    let w = extend(&w, at_inf);
                    if confirm_witness(orig, &w, cfg.mode) {
                        let small = try_falsify(orig, piece, at_inf, cfg.falsify_budget.min(SHRINK_BUDGET), cfg);
                        return PieceResult::Invalid(small.unwrap_or(w), Decision::Solver);
                    }
                    reason = UnknownReason::SolverUnknown;
                }
                Verdict::Unknown(r) => reason = r,
            },
            None => reason = UnknownReason::IncompleteInternalCheck,
        }
    }
    match try_falsify(orig, piece, at_inf, cfg.falsify_budget, cfg) {
        Some(w) => PieceResult::Invalid(w, Decision::Falsifier),
        None => PieceResult::Unknown(reason),
    }
}

/// Checks every task on a pool of `cfg.jobs` threads. Results come back in
/// task order.
pub fn check_tasks(tasks: &[Task], cfg: &CheckConfig) -> Vec<TaskResult> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<TaskResult>>> = Mutex::new(vec![None; tasks.len()]);
    let workers = cfg.jobs.clamp(1, tasks.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(task) = tasks.get(k) else { break };
                let start = Instant::now();
                let (verdict, decided_by) = check_task(task, cfg, &format!("ob{k}"));
                let r = TaskResult {
                    task: task.clone(),
                    verdict,
                    decided_by,
                    millis: start.elapsed().as_millis(),
                };
                results.lock().expect("result lock")[k] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every task checked"))
        .collect()
}

/// Lowers and checks a list of typing constraints.
pub fn check_constraints(constraints: &[Constraint], cfg: &CheckConfig) -> Vec<TaskResult> {
    check_tasks(&lower(constraints, cfg.simplify), cfg)
}

/// `Valid` iff all are valid, `Invalid` if any is, `Unknown` otherwise.
pub fn overall<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
    let mut out = Verdict::Valid;
    for v in verdicts {
        match v {
            Verdict::Invalid(_) => return v.clone(),
            Verdict::Unknown(_) if out == Verdict::Valid => out = v.clone(),
            _ => {}
        }
    }
    out
}
