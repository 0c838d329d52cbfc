use std::collections::BTreeSet;
use std::fmt;

use super::club::{club_of, normalize_traced, ClubExpr, Normalization};
use super::formula::{refinements_formula, Arith, Formula};
use super::translate::{sort_of, TranslateError};
use super::Mode;
use crate::ast::{IdxEnv, RefinementSet, SensExpr};
use crate::typing::{Constraint, Origin};

/// `∀outer. ∀local. (Φ ∧ Φⱼ) ⇒ lhs ≥ rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub outer_env: IdxEnv,
    pub outer_refinements: RefinementSet,
    pub local_env: IdxEnv,
    pub local_refinements: RefinementSet,
    pub lhs: SensExpr,
    pub rhs: SensExpr,
}

impl Obligation {
    pub fn env(&self) -> IdxEnv {
        self.outer_env.concat(&self.local_env)
    }

    pub fn refinements(&self) -> RefinementSet {
        self.outer_refinements.and(&self.local_refinements)
    }

    /// The same statement as a flat constraint.
    pub fn as_constraint(&self, origin: &Origin) -> Constraint {
        Constraint::new(self.env(), self.refinements(), self.lhs.clone(), self.rhs.clone(), origin.clone())
    }

    pub fn formula(&self, mode: Mode) -> Result<Formula, TranslateError> {
        universal_formula(&self.as_constraint(&Origin::default()), mode)
    }
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_constraint(&Origin::default()))
    }
}

/// `∀φ. Φ ⇒ lhs ≥ rhs` for a constraint whose sides are standard and
/// `∞`-free. Contains no existential quantifier.
pub fn universal_formula(c: &Constraint, mode: Mode) -> Result<Formula, TranslateError> {
    let lhs = Arith::from_sens(&c.lhs).ok_or_else(|| TranslateError::NonStandardLhs(crate::syntax::pretty_sens(&c.lhs)))?;
    let rhs = Arith::from_sens(&c.rhs).ok_or_else(|| TranslateError::NonStandardLhs(crate::syntax::pretty_sens(&c.rhs)))?;
    let phi = refinements_formula(&c.refinements).ok_or(TranslateError::InfiniteRefinement)?;
    let vars: Vec<_> = c
        .idx_env
        .iter()
        .map(|(n, k)| (n.to_string(), sort_of(k, mode)))
        .collect();
    Ok(Formula::forall_many(&vars, Formula::implies(phi, Formula::ge(lhs, rhs))))
}

/// One obligation per entry of a normal club; `lhs ≥ 0` for the empty club.
pub fn flatten(c: &Constraint, normal: &ClubExpr) -> Vec<Obligation> {
    let entries = normal.normal_entries().expect("flatten expects a normal club");
    let base = |local_env: IdxEnv, local_refinements: RefinementSet, rhs: SensExpr| Obligation {
        outer_env: c.idx_env.clone(),
        outer_refinements: c.refinements.clone(),
        local_env,
        local_refinements,
        lhs: c.lhs.clone(),
        rhs,
    };
    if entries.is_empty() {
        return vec![base(IdxEnv::new(), RefinementSet::new(), SensExpr::zero())];
    }
    entries
        .into_iter()
        .map(|(env, refs, body)| base(env.clone(), refs.clone(), body.clone()))
        .collect()
}

/// Output of [`simplify`].
#[derive(Clone, Debug)]
pub struct Simplified {
    pub club: ClubExpr,
    pub normalization: Normalization,
    pub obligations: Vec<Obligation>,
}

/// The club pipeline for one constraint: `C(rhs)`, normalization and
/// flattening.
pub fn simplify(c: &Constraint) -> Simplified {
    let mut outer: BTreeSet<String> = c.idx_env.names();
    outer.extend(c.refinements.free_vars());
    c.lhs.all_names(&mut outer);
    let club = club_of(&c.rhs, &outer);
    let normalization = normalize_traced(&club, &outer);
    let obligations = flatten(c, &normalization.result);
    Simplified {
        club,
        normalization,
        obligations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Kind, Refinement};
    use crate::constraints::club::ClubEntry;
    use crate::syntax::parse_sens;

    fn lhs_constraint(lhs: &str, rhs: &str) -> Constraint {
        let mut c = Constraint::closed(parse_sens(lhs).unwrap(), parse_sens(rhs).unwrap());
        c.idx_env = IdxEnv::from_pairs(&[("q", Kind::Sens), ("s", Kind::Size)]);
        c
    }

    #[test]
    fn one_obligation_per_entry() {
        let c = lhs_constraint("q", "scase s { 0 => 2 | i + 1 => i }");
        let out = simplify(&c).obligations;
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].local_refinements, RefinementSet::new().with(Refinement::IsZero(SensExpr::var("s"))));
        assert_eq!(out[0].rhs, SensExpr::num(2));
        assert_eq!(out[1].local_env, IdxEnv::from_pairs(&[("i", Kind::Size)]));
        assert_eq!(out[1].to_string(), "q : sens, s : size, i : size | s = i + 1 |= q >= i");
    }

    #[test]
    fn empty_and_single_clubs() {
        let c = lhs_constraint("q", "0");
        let empty = flatten(&c, &ClubExpr::Club(vec![]));
        assert_eq!(empty.len(), 1);
        assert_eq!(empty[0].rhs, SensExpr::zero());
        let one = ClubExpr::Club(vec![ClubEntry::new(
            IdxEnv::new(),
            RefinementSet::new(),
            ClubExpr::Leaf(parse_sens("s * s").unwrap()),
        )]);
        let out = flatten(&c, &one);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].rhs, parse_sens("s * s").unwrap());
    }

    #[test]
    fn formulas_are_universal() {
        let c = lhs_constraint("q + 1", "max(q, scase s { 0 => 1 | i + 1 => sup (j : size) . i })");
        for o in simplify(&c).obligations {
            let f = o.formula(Mode::Mixed).unwrap();
            assert_eq!(f.count_exists(), 0);
            assert!(f.is_closed());
        }
    }

    #[test]
    fn local_names_avoid_the_left_side() {
        let mut c = lhs_constraint("i", "sup (i : size) . i");
        c.idx_env = IdxEnv::from_pairs(&[("i", Kind::Size)]);
        let out = simplify(&c).obligations;
        assert_eq!(out.len(), 1);
        assert!(!out[0].local_env.contains("i"));
    }
}
