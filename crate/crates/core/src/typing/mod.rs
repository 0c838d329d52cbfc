//! Constraint-generating subtyping and sensitivity inference.
//!
//! Inference is syntax-directed over a Box-annotated skeleton: every numeric
//! side condition is collected as a [`Constraint`] tagged with the ambient
//! index environment and refinements, never decided on the spot. Only
//! structural mismatches fail eagerly.

mod infer;
mod subtype;

use std::fmt;

use thiserror::Error;

use crate::ast::{IdxEnv, KindError, Loc, Refinement, RefinementSet, SensExpr, Term, Type};
use crate::semantics::{EnvError, VarEnv};
use crate::syntax::{pretty_sens, pretty_type};

pub use infer::{check, infer, infer_closed, InferOptions, Prelude};
pub use subtype::{env_subtype, subtype};

/// Where a constraint came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub loc: Loc,
    pub rule: &'static str,
}

impl Default for Origin {
    fn default() -> Self {
        Origin {
            loc: Loc::default(),
            rule: "Goal",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.rule, self.loc)
    }
}

/// `φ; Φ ⊨ lhs ≥ rhs`: for every valuation of `idx_env` satisfying the
/// refinements, `lhs` is at least `rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub idx_env: IdxEnv,
    pub refinements: RefinementSet,
    pub lhs: SensExpr,
    pub rhs: SensExpr,
    pub origin: Origin,
}

impl Constraint {
    pub fn new(idx_env: IdxEnv, refinements: RefinementSet, lhs: SensExpr, rhs: SensExpr, origin: Origin) -> Self {
        Constraint {
            idx_env,
            refinements,
            lhs,
            rhs,
            origin,
        }
    }

    /// A closed constraint without refinements.
    pub fn closed(lhs: SensExpr, rhs: SensExpr) -> Self {
        Constraint::new(
            IdxEnv::new(),
            RefinementSet::new(),
            lhs,
            rhs,
            Origin {
                loc: Loc::default(),
                rule: "Goal",
            },
        )
    }
}

pub fn pretty_refinement(r: &Refinement) -> String {
    match r {
        Refinement::IsZero(s) => format!("{} = 0", pretty_sens(s)),
        Refinement::IsSucc(s, i) => format!("{} = {i} + 1", pretty_sens(s)),
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phi: Vec<String> = self.idx_env.iter().map(|(n, k)| format!("{n} : {k}")).collect();
        let refs: Vec<String> = self.refinements.iter().map(pretty_refinement).collect();
        let phi = if phi.is_empty() { ".".to_string() } else { phi.join(", ") };
        if refs.is_empty() {
            write!(f, "{phi} |= ")?;
        } else {
            write!(f, "{phi} | {} |= ", refs.join(", "))?;
        }
        write!(f, "{} >= {}", pretty_sens(&self.lhs), pretty_sens(&self.rhs))
    }
}

/// Output of [`infer`].
#[derive(Clone, Debug, PartialEq)]
pub struct InferenceResult {
    pub env: VarEnv,
    pub ty: Type,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{loc}: unbound variable `{name}`")]
    UnboundVariable { loc: Loc, name: String },
    #[error("{loc}: unknown primitive `{name}`")]
    UnknownPrimitive { loc: Loc, name: String },
    #[error("{loc}: {source}")]
    Kind { loc: Loc, source: KindError },
    #[error("{loc}: type mismatch: {left} is not a subtype of {right} ({path})")]
    StructuralMismatch {
        loc: Loc,
        left: String,
        right: String,
        path: String,
    },
    #[error("{loc}: expected {expected}, found {found}")]
    Expected { loc: Loc, expected: String, found: String },
    #[error("{loc}: {source}")]
    Env { loc: Loc, source: EnvError },
    #[error("{loc}: binders of a pair must be distinct, got `{name}` twice")]
    DuplicateBinder { loc: Loc, name: String },
    #[error("{loc}: constraint has extended left-hand side {lhs}")]
    NonStandardLhs { loc: Loc, lhs: String },
}

impl TypeError {
    pub fn loc(&self) -> Loc {
        match self {
            TypeError::UnboundVariable { loc, .. }
            | TypeError::UnknownPrimitive { loc, .. }
            | TypeError::Kind { loc, .. }
            | TypeError::StructuralMismatch { loc, .. }
            | TypeError::Expected { loc, .. }
            | TypeError::Env { loc, .. }
            | TypeError::DuplicateBinder { loc, .. }
            | TypeError::NonStandardLhs { loc, .. } => *loc,
        }
    }

    fn mismatch(loc: Loc, left: &Type, right: &Type, path: &str) -> Self {
        TypeError::StructuralMismatch {
            loc,
            left: pretty_type(left),
            right: pretty_type(right),
            path: if path.is_empty() { "at the root".into() } else { format!("at {path}") },
        }
    }
}

/// Every term binder is distinct from the names in `avoid`; used to keep
/// skeleton extensions well-formed.
pub(crate) fn rename_term_binder(body: &Term, old: &str, avoid: &dyn Fn(&str) -> bool) -> (String, Term) {
    if !avoid(old) {
        return (old.to_string(), body.clone());
    }
    let fv = body.free_vars();
    let new = crate::ast::fresh_name(old, |c| avoid(c) || fv.contains(c));
    (new.clone(), body.rename_var(old, &new))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Kind;

    #[test]
    fn constraint_display() {
        let c = Constraint::new(
            IdxEnv::from_pairs(&[("i", Kind::Size)]),
            RefinementSet::new().with(Refinement::IsZero(SensExpr::var("i"))),
            SensExpr::plus(SensExpr::var("i"), SensExpr::one()),
            SensExpr::one(),
            Origin {
                loc: Loc::new(1, 1),
                rule: "Lam",
            },
        );
        assert_eq!(c.to_string(), "i : size | i = 0 |= i + 1 >= 1");
        assert_eq!(Constraint::closed(SensExpr::num(3), SensExpr::num(2)).to_string(), ". |= 3 >= 2");
    }
}
