//! Lowering of sensitivity constraints to first-order arithmetic.
//!
//! Two routes are available. [`translate`] and [`translate_uniform`] encode
//! a constraint directly, with existentials for every intermediate value.
//! [`simplify`] rewrites the right-hand side into a single club and splits it
//! into [`Obligation`]s that only use universal quantifiers.

mod club;
mod formula;
mod infinity;
mod obligation;
mod translate;

use crate::semantics::ValuationMode;

pub use club::{
    club_of, eval_club, normalize_club, normalize_traced, push_leaves, step, to_club, uniquify_binders, ClubEntry,
    ClubExpr, Normalization, Rule,
};
pub use formula::{refinement_formula, refinements_formula, Arith, CmpOp, Formula, Sort};
pub use infinity::{
    eliminate_infinity, infinity_capable, split_infinity, substitute_infinity, InfOutcome, SplitPiece, MAX_SPLIT_VARS,
};
pub use obligation::{flatten, simplify, universal_formula, Obligation, Simplified};
pub use translate::{sens_formula, sort_of, translate, translate_uniform, TranslateError};

/// Which reading of index variables constraints are checked under.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Size variables range over naturals, sensitivities over `[0, ∞]`.
    #[default]
    Mixed,
    /// Every variable ranges over `[0, ∞]`.
    Uniform,
}

impl Mode {
    pub fn valuation_mode(self) -> ValuationMode {
        match self {
            Mode::Mixed => ValuationMode::Standard,
            Mode::Uniform => ValuationMode::Uniform,
        }
    }
}
