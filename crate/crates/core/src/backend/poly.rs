use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::ast::{Refinement, SensExpr};
use crate::constraints::{split_infinity, InfOutcome, Mode, Obligation};
use crate::ext_real::fmt_rational;
use crate::typing::Constraint;

/// A product of variables with positive exponents, sorted by name.
pub type Monomial = Vec<(String, u32)>;

/// A multivariate polynomial with rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(q: BigRational) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), q);
        p
    }

    pub fn var(name: &str) -> Poly {
        let mut p = Poly::zero();
        p.add_term(vec![(name.to_string(), 1)], BigRational::from_integer(1.into()));
        p
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(mul_monomials(m1, m2), c1 * c2);
            }
        }
        out
    }

    /// `None` for `∞` or extended terms.
    pub fn from_sens(s: &SensExpr) -> Option<Poly> {
        match s {
            SensExpr::Const(c) => c.as_finite().map(|q| Poly::constant(q.clone())),
            SensExpr::Var(v) => Some(Poly::var(v)),
            SensExpr::Plus(a, b) => Some(Poly::from_sens(a)?.add(&Poly::from_sens(b)?)),
            SensExpr::Times(a, b) => Some(Poly::from_sens(a)?.mul(&Poly::from_sens(b)?)),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.iter().map(|(_, e)| e).sum())
            .max()
            .unwrap_or(0)
    }

    /// No negative coefficient, hence nonnegative on nonnegative arguments.
    pub fn coefficients_nonnegative(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<String, u32> = a.iter().cloned().collect();
    for (v, e) in b {
        *map.entry(v.clone()).or_insert(0) += e;
    }
    map.into_iter().collect()
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut s = fmt_rational(c);
                for (v, e) in m {
                    if *e == 1 {
                        s.push_str(&format!("*{v}"));
                    } else {
                        s.push_str(&format!("*{v}^{e}"));
                    }
                }
                s
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Outcome of the coefficient check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolyVerdict {
    Valid,
    Unknown,
}

/// Substitutes `S = 0` and `S = i + 1` refinements whose scrutinee is a
/// variable, dropping the rest, and checks that `lhs - rhs` has no negative
/// coefficient. Variables range over finite nonnegative values here.
pub fn dominates_finite(c: &Constraint) -> PolyVerdict {
    let mut lhs = c.lhs.clone();
    let mut rhs = c.rhs.clone();
    let mut refs: Vec<Refinement> = c.refinements.0.clone();
    while let Some(pos) = refs.iter().position(|r| matches!(r, Refinement::IsZero(SensExpr::Var(_)) | Refinement::IsSucc(SensExpr::Var(_), _))) {
        let r = refs.remove(pos);
        let (v, repl) = match r {
            Refinement::IsZero(SensExpr::Var(v)) => (v, SensExpr::zero()),
            Refinement::IsSucc(SensExpr::Var(v), i) => {
                if v == i {
                    continue;
                }
                (v, SensExpr::plus(SensExpr::var(&i), SensExpr::one()))
            }
            _ => unreachable!(),
        };
        lhs = lhs.subst(&v, &repl);
        rhs = rhs.subst(&v, &repl);
        refs = refs.iter().map(|r| r.subst(&v, &repl)).collect();
    }
    match (Poly::from_sens(&lhs), Poly::from_sens(&rhs)) {
        (Some(l), Some(r)) if l.sub(&r).coefficients_nonnegative() => PolyVerdict::Valid,
        _ => PolyVerdict::Unknown,
    }
}

/// The coefficient check on a constraint, with `∞` handled by a split over
/// the variables that may take it under `mode`.
pub fn dominates(c: &Constraint, mode: Mode) -> PolyVerdict {
    let Some(pieces) = split_infinity(c, mode) else {
        return PolyVerdict::Unknown;
    };
    for p in pieces {
        match p.outcome {
            InfOutcome::Valid => {}
            InfOutcome::RhsInfinite(_) => return PolyVerdict::Unknown,
            InfOutcome::Finite(c) => {
                if dominates_finite(&c) == PolyVerdict::Unknown {
                    return PolyVerdict::Unknown;
                }
            }
        }
    }
    PolyVerdict::Valid
}

/// [`dominates`] on an obligation.
pub fn poly_dominate(o: &Obligation, mode: Mode) -> PolyVerdict {
    dominates(&o.as_constraint(&Default::default()), mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{IdxEnv, Kind, RefinementSet};
    use crate::syntax::parse_sens;

    fn ob(env: &[(&str, Kind)], refs: RefinementSet, lhs: &str, rhs: &str) -> Obligation {
        Obligation {
            outer_env: IdxEnv::from_pairs(env),
            outer_refinements: refs,
            local_env: IdxEnv::new(),
            local_refinements: RefinementSet::new(),
            lhs: parse_sens(lhs).unwrap(),
            rhs: parse_sens(rhs).unwrap(),
        }
    }

    #[test]
    fn examples() {
        let n = [("i", Kind::Size)];
        let none = RefinementSet::new();
        assert_eq!(poly_dominate(&ob(&n, none.clone(), "3 * i + 3", "3 * (i + 1)"), Mode::Mixed), PolyVerdict::Valid);
        assert_eq!(poly_dominate(&ob(&n, none.clone(), "3 * (i + 1)", "3 * i + 3"), Mode::Uniform), PolyVerdict::Valid);
        let r = [("r", Kind::Sens)];
        assert_eq!(poly_dominate(&ob(&r, none.clone(), "r * r + r", "r"), Mode::Mixed), PolyVerdict::Valid);
        assert_eq!(poly_dominate(&ob(&n, none, "i * i + 1", "2 * i"), Mode::Mixed), PolyVerdict::Unknown);
    }

    #[test]
    fn refinements_are_substituted() {
        let env = [("s", Kind::Size), ("i", Kind::Size)];
        let refs = RefinementSet::new().with(Refinement::IsSucc(SensExpr::var("s"), "i".into()));
        assert_eq!(poly_dominate(&ob(&env, refs, "s", "i + 1"), Mode::Mixed), PolyVerdict::Valid);
        let refs = RefinementSet::new().with(Refinement::IsZero(SensExpr::var("s")));
        assert_eq!(poly_dominate(&ob(&env, refs, "1", "s + 1"), Mode::Mixed), PolyVerdict::Valid);
    }

    #[test]
    fn infinity_times_zero_is_not_dominated() {
        let r = [("r", Kind::Sens)];
        let o = ob(&r, RefinementSet::new(), "1", "0 * r");
        assert_eq!(poly_dominate(&o, Mode::Mixed), PolyVerdict::Unknown);
    }

    #[test]
    fn arithmetic() {
        let p = Poly::from_sens(&parse_sens("(i + 1) * (i + 1)").unwrap()).unwrap();
        assert_eq!(p.to_string(), "1 + 2*i + 1*i^2");
        assert_eq!(p.degree(), 2);
        assert!(p.sub(&p).is_zero());
    }
}
