use std::collections::BTreeSet;

use crate::ast::{fold, IdxEnv, Kind, Refinement, RefinementSet, SensExpr};
use crate::typing::Constraint;

use super::Mode;

/// Result of constant-folding `∞` out of a constraint.
#[derive(Clone, Debug, PartialEq)]
pub enum InfOutcome {
    /// The left side is `∞`.
    Valid,
    /// The right side is `∞` and the left side is finite, so the constraint
    /// holds only where its refinements are unsatisfiable.
    RhsInfinite(Constraint),
    /// Both sides fold to something other than `∞`. The right side may still
    /// carry `∞` inside case branches or sup bodies.
    Finite(Constraint),
}

/// Folds both sides with the absorbing algebra and classifies the result.
pub fn eliminate_infinity(c: &Constraint) -> InfOutcome {
    let lhs = fold(&c.lhs);
    let rhs = fold(&c.rhs);
    let out = Constraint { lhs, rhs, ..c.clone() };
    if out.lhs.is_infinity() {
        InfOutcome::Valid
    } else if out.rhs.is_infinity() {
        InfOutcome::RhsInfinite(out)
    } else {
        InfOutcome::Finite(out)
    }
}

/// Variables of `env` that may take the value `∞` under `mode`.
pub fn infinity_capable(env: &IdxEnv, mode: Mode) -> Vec<String> {
    env.iter()
        .filter(|(_, k)| mode == Mode::Uniform || *k == Kind::Sens)
        .map(|(n, _)| n.to_string())
        .collect()
}

/// Largest number of `∞`-capable variables split exhaustively.
pub const MAX_SPLIT_VARS: usize = 8;

/// One case of an `∞`-split: the variables set to `∞` and what remains.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPiece {
    pub at_infinity: Vec<String>,
    pub outcome: InfOutcome,
}

/// Enumerates every subset `V` of the `∞`-capable variables, substitutes `∞`
/// for `V` and folds. The remaining variables range over finite values.
/// Pieces whose refinements become unsatisfiable are dropped. `None` when
/// there are more than [`MAX_SPLIT_VARS`] candidates.
pub fn split_infinity(c: &Constraint, mode: Mode) -> Option<Vec<SplitPiece>> {
    let vars = infinity_capable(&c.idx_env, mode);
    if vars.len() > MAX_SPLIT_VARS {
        return None;
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << vars.len()) {
        let chosen: Vec<String> = vars
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, v)| v.clone())
            .collect();
        if let Some(piece) = substitute_infinity(c, &chosen) {
            out.push(SplitPiece {
                at_infinity: chosen,
                outcome: eliminate_infinity(&piece),
            });
        }
    }
    Some(out)
}

/// Sets `vars` to `∞`; `None` if the refinements become unsatisfiable.
pub fn substitute_infinity(c: &Constraint, vars: &[String]) -> Option<Constraint> {
    let set: BTreeSet<&str> = vars.iter().map(|s| s.as_str()).collect();
    let inf = SensExpr::inf();
    let sub = |s: &SensExpr| {
        let mut s = s.clone();
        for v in vars {
            s = s.subst(v, &inf);
        }
        fold(&s)
    };
    let mut refs = Vec::new();
    for r in c.refinements.iter() {
        match r {
            Refinement::IsZero(s) => {
                let s = sub(s);
                match s.as_const() {
                    Some(k) if k.is_zero() => {}
                    Some(_) => return None,
                    None => refs.push(Refinement::IsZero(s)),
                }
            }
            Refinement::IsSucc(s, i) => {
                let s = sub(s);
                let s_inf = s.is_infinity();
                if set.contains(i.as_str()) {
                    // ∞ = ∞ + 1 holds, and a term over finite variables is
                    // never ∞.
                    if !s_inf {
                        return None;
                    }
                } else if s_inf {
                    return None;
                } else {
                    refs.push(Refinement::IsSucc(s, i.clone()));
                }
            }
        }
    }
    let mut env = c.idx_env.clone();
    env.retain(|n| !set.contains(n));
    Some(Constraint {
        idx_env: env,
        refinements: RefinementSet(refs),
        lhs: sub(&c.lhs),
        rhs: sub(&c.rhs),
        origin: c.origin.clone(),
    })
}
