use std::collections::BTreeSet;

use thiserror::Error;

use super::formula::{refinements_formula, Arith, CmpOp, Formula, Sort};
use super::Mode;
use crate::ast::{fold, Kind, SensExpr};
use crate::syntax::pretty_sens;
use crate::typing::Constraint;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("left-hand side {0} is not a standard sensitivity")]
    NonStandardLhs(String),
    #[error("refinement index mentions infinity")]
    InfiniteRefinement,
}

/// Sort of an index variable of kind `k` under `mode`.
pub fn sort_of(k: Kind, mode: Mode) -> Sort {
    match (mode, k) {
        (Mode::Mixed, Kind::Size) => Sort::Nat,
        _ => Sort::SensReal,
    }
}

/// `∀φ. Φ ⇒ ∃r₁ r₂. T(R₁)(r₁) ∧ T(R₂)(r₂) ∧ r₁ ≥ r₂`.
pub fn translate(c: &Constraint) -> Result<Formula, TranslateError> {
    let mut tr = Translator::new(c, Mode::Mixed);
    let (r1, r2) = (tr.fresh(), tr.fresh());
    let body = Formula::exists_many(
        &[(r1.clone(), Sort::SensReal), (r2.clone(), Sort::SensReal)],
        Formula::and(vec![
            tr.t(&c.lhs, &r1),
            tr.t(&c.rhs, &r2),
            Formula::ge(Arith::var(&r1), Arith::var(&r2)),
        ]),
    );
    tr.close(c, body)
}

/// `∀φ. Φ ⇒ ∃r. Tᵁ(R₂)(r) ∧ R₁ ≥ r`, every variable a nonnegative real.
pub fn translate_uniform(c: &Constraint) -> Result<Formula, TranslateError> {
    let lhs = Arith::from_sens(&c.lhs).ok_or_else(|| TranslateError::NonStandardLhs(pretty_sens(&c.lhs)))?;
    let mut tr = Translator::new(c, Mode::Uniform);
    let r = tr.fresh();
    let body = Formula::exists(
        &r,
        Sort::SensReal,
        Formula::and(vec![tr.t(&c.rhs, &r), Formula::ge(lhs, Arith::var(&r))]),
    );
    tr.close(c, body)
}

/// `T(R)(r)` (or `Tᵁ` in uniform mode) on its own, for inspection.
pub fn sens_formula(s: &SensExpr, r: &str, mode: Mode) -> Formula {
    let mut names = BTreeSet::new();
    s.all_names(&mut names);
    names.insert(r.to_string());
    let mut tr = Translator {
        mode,
        counter: 0,
        taken: names,
    };
    tr.t(s, r)
}

struct Translator {
    mode: Mode,
    counter: usize,
    taken: BTreeSet<String>,
}

impl Translator {
    fn new(c: &Constraint, mode: Mode) -> Self {
        let mut taken = BTreeSet::new();
        c.lhs.all_names(&mut taken);
        c.rhs.all_names(&mut taken);
        taken.extend(c.idx_env.names());
        taken.extend(c.refinements.free_vars());
        Translator { mode, counter: 0, taken }
    }

    fn fresh(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("r{}", self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    fn close(&self, c: &Constraint, body: Formula) -> Result<Formula, TranslateError> {
        let phi = refinements_formula(&c.refinements).ok_or(TranslateError::InfiniteRefinement)?;
        let vars: Vec<(String, Sort)> = c
            .idx_env
            .iter()
            .map(|(n, k)| (n.to_string(), sort_of(k, self.mode)))
            .collect();
        Ok(Formula::forall_many(&vars, Formula::implies(phi, body)))
    }

    fn binary(&mut self, a: &SensExpr, b: &SensExpr, r: &str, op: fn(Arith, Arith) -> Arith) -> Formula {
        let (r1, r2) = (self.fresh(), self.fresh());
        let fa = self.t(a, &r1);
        let fb = self.t(b, &r2);
        Formula::exists_many(
            &[(r1.clone(), Sort::SensReal), (r2.clone(), Sort::SensReal)],
            Formula::and(vec![fa, fb, Formula::eq(Arith::var(r), op(Arith::var(&r1), Arith::var(&r2)))]),
        )
    }

    fn max_of(&mut self, fa: impl FnOnce(&mut Self, &str) -> Formula, fb: impl FnOnce(&mut Self, &str) -> Formula, r: &str) -> Formula {
        let (r1, r2) = (self.fresh(), self.fresh());
        let fa = fa(self, &r1);
        let fb = fb(self, &r2);
        let (v1, v2, vr) = (Arith::var(&r1), Arith::var(&r2), Arith::var(r));
        let pick = Formula::or(vec![
            Formula::and(vec![Formula::ge(v1.clone(), v2.clone()), Formula::eq(vr.clone(), v1.clone())]),
            Formula::and(vec![Formula::ge(v2.clone(), v1), Formula::eq(vr, v2)]),
        ]);
        Formula::exists_many(
            &[(r1, Sort::SensReal), (r2, Sort::SensReal)],
            Formula::and(vec![fa, fb, pick]),
        )
    }

    /// `bound(i:κ, R, x) := ∀i:κ. ∃r'. T(R)(r') ∧ r' ≤ x`
    fn bound(&mut self, i: &str, kind: Kind, body: &SensExpr, x: &str) -> Formula {
        let r = self.fresh();
        let inner = Formula::exists(
            &r,
            Sort::SensReal,
            Formula::and(vec![self.t(body, &r), Formula::cmp(CmpOp::Le, Arith::var(&r), Arith::var(x))]),
        );
        Formula::forall(i, sort_of(kind, self.mode), inner)
    }

    fn finite_sup(&mut self, i: &str, kind: Kind, body: &SensExpr, r: &str) -> Formula {
        let least = self.fresh();
        let is_bound = self.bound(i, kind, body, r);
        let other = self.bound(i, kind, body, &least);
        Formula::and(vec![
            is_bound,
            Formula::forall(
                &least,
                Sort::SensReal,
                Formula::implies(other, Formula::ge(Arith::var(&least), Arith::var(r))),
            ),
        ])
    }

    fn t(&mut self, s: &SensExpr, r: &str) -> Formula {
        match s {
            SensExpr::Const(c) => match c.as_finite() {
                Some(q) => Formula::eq(Arith::var(r), Arith::Const(q.clone())),
                None => Formula::False,
            },
            SensExpr::Var(i) => Formula::eq(Arith::var(i), Arith::var(r)),
            SensExpr::Plus(a, b) => self.binary(a, b, r, Arith::sum),
            SensExpr::Times(a, b) => self.binary(a, b, r, Arith::product),
            SensExpr::Max(a, b) => self.max_of(|tr, x| tr.t(a, x), |tr, x| tr.t(b, x), r),
            SensExpr::Sup { binder, kind, body } => {
                let infinite = self.mode == Mode::Uniform || *kind == Kind::Sens;
                if !infinite {
                    return self.finite_sup(binder, *kind, body, r);
                }
                // The binder ranges over [0, ∞]; the value at ∞ is folded
                // separately since quantifiers range over finite values.
                let at_inf = fold(&body.subst(binder, &SensExpr::inf()));
                self.max_of(|tr, x| tr.finite_sup(binder, *kind, body, x), |tr, x| tr.t(&at_inf, x), r)
            }
            SensExpr::Case {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                let rs = self.fresh();
                let vs = Arith::var(&rs);
                let scrut = self.t(scrutinee, &rs);
                let zero_branch = Formula::and(vec![Formula::eq(vs.clone(), Arith::int(0)), self.t(zero, r)]);
                let succ_sort = sort_of(Kind::Size, self.mode);
                let succ_branch = Formula::exists(
                    binder,
                    succ_sort,
                    Formula::and(vec![
                        Formula::eq(vs.clone(), Arith::sum(Arith::var(binder), Arith::int(1))),
                        self.t(succ, r),
                    ]),
                );
                let branches = match self.mode {
                    Mode::Mixed => vec![zero_branch, succ_branch],
                    Mode::Uniform => vec![
                        zero_branch,
                        Formula::and(vec![
                            Formula::cmp(CmpOp::Gt, vs.clone(), Arith::int(0)),
                            Formula::cmp(CmpOp::Lt, vs.clone(), Arith::int(1)),
                            Formula::eq(Arith::var(r), Arith::int(0)),
                        ]),
                        succ_branch,
                    ],
                };
                Formula::exists(&rs, succ_sort, Formula::and(vec![scrut, Formula::or(branches)]))
            }
        }
    }
}
