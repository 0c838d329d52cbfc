use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;

use crate::ast::{Refinement, RefinementSet, SensExpr};
use crate::ext_real::{fmt_rational, ExtReal};

/// Quantifier sorts. Both range over nonnegative values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Nat,
    SensReal,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Nat => "nat",
            Sort::SensReal => "real+",
        })
    }
}

/// Arithmetic terms over variables and finite rational constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Arith {
    Var(String),
    Const(BigRational),
    Add(Box<Arith>, Box<Arith>),
    Mul(Box<Arith>, Box<Arith>),
}

impl Arith {
    pub fn var(name: &str) -> Arith {
        Arith::Var(name.to_string())
    }

    pub fn int(n: i64) -> Arith {
        Arith::Const(BigRational::from_integer(n.into()))
    }

    pub fn sum(a: Arith, b: Arith) -> Arith {
        Arith::Add(Box::new(a), Box::new(b))
    }

    pub fn product(a: Arith, b: Arith) -> Arith {
        Arith::Mul(Box::new(a), Box::new(b))
    }

    /// `None` if `s` is extended or mentions `∞`.
    pub fn from_sens(s: &SensExpr) -> Option<Arith> {
        match s {
            SensExpr::Const(ExtReal::Finite(q)) => Some(Arith::Const(q.clone())),
            SensExpr::Const(ExtReal::Infinity) => None,
            SensExpr::Var(v) => Some(Arith::var(v)),
            SensExpr::Plus(a, b) => Some(Arith::sum(Arith::from_sens(a)?, Arith::from_sens(b)?)),
            SensExpr::Times(a, b) => Some(Arith::product(Arith::from_sens(a)?, Arith::from_sens(b)?)),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Arith::Var(v) => {
                out.insert(v.clone());
            }
            Arith::Const(_) => {}
            Arith::Add(a, b) | Arith::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Arith {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arith::Var(v) => f.write_str(v),
            Arith::Const(q) => f.write_str(&fmt_rational(q)),
            Arith::Add(a, b) => write!(f, "({a} + {b})"),
            Arith::Mul(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Ge,
    Le,
    Eq,
    Gt,
    Lt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
        }
    }
}

/// First-order formulas over naturals and nonnegative reals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(CmpOp, Arith, Arith),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    ForAll(String, Sort, Box<Formula>),
    Exists(String, Sort, Box<Formula>),
}

impl Formula {
    pub fn cmp(op: CmpOp, l: Arith, r: Arith) -> Formula {
        Formula::Cmp(op, l, r)
    }

    pub fn eq(l: Arith, r: Arith) -> Formula {
        Formula::Cmp(CmpOp::Eq, l, r)
    }

    pub fn ge(l: Arith, r: Arith) -> Formula {
        Formula::Cmp(CmpOp::Ge, l, r)
    }

    /// Conjunction with `True` dropped and `False` absorbing.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().expect("one element"),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with `False` dropped and `True` absorbing.
    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().expect("one element"),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        match (&a, &b) {
            (Formula::True, _) => b,
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            _ => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn negate(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn forall(var: &str, sort: Sort, body: Formula) -> Formula {
        Formula::ForAll(var.to_string(), sort, Box::new(body))
    }

    pub fn exists(var: &str, sort: Sort, body: Formula) -> Formula {
        Formula::Exists(var.to_string(), sort, Box::new(body))
    }

    /// Wraps `body` in universal quantifiers, outermost first.
    pub fn forall_many(vars: &[(String, Sort)], body: Formula) -> Formula {
        vars.iter().rev().fold(body, |acc, (v, s)| Formula::forall(v, *s, acc))
    }

    pub fn exists_many(vars: &[(String, Sort)], body: Formula) -> Formula {
        vars.iter().rev().fold(body, |acc, (v, s)| Formula::exists(v, *s, acc))
    }

    /// Number of existential quantifier nodes.
    pub fn count_exists(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Cmp(..) => 0,
            Formula::And(ps) | Formula::Or(ps) => ps.iter().map(Formula::count_exists).sum(),
            Formula::Implies(a, b) => a.count_exists() + b.count_exists(),
            Formula::Not(a) | Formula::ForAll(_, _, a) => a.count_exists(),
            Formula::Exists(_, _, a) => 1 + a.count_exists(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, l, r) => {
                let mut vs = BTreeSet::new();
                l.collect_vars(&mut vs);
                r.collect_vars(&mut vs);
                out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
            }
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.collect_free(bound, out)),
            Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::ForAll(v, _, a) | Formula::Exists(v, _, a) => {
                bound.push(v.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Cmp(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
            Formula::And(ps) | Formula::Or(ps) => {
                let sep = if matches!(self, Formula::And(_)) { " /\\ " } else { " \\/ " };
                let parts: Vec<String> = ps.iter().map(|p| format!("({p})")).collect();
                f.write_str(&parts.join(sep))
            }
            Formula::Implies(a, b) => write!(f, "({a}) => ({b})"),
            Formula::Not(a) => write!(f, "~({a})"),
            Formula::ForAll(v, s, a) => write!(f, "forall {v} : {s}. {a}"),
            Formula::Exists(v, s, a) => write!(f, "exists {v} : {s}. {a}"),
        }
    }
}

/// `S = 0` and `S = i + 1` as formulas; `None` if an index is not
/// translatable.
pub fn refinement_formula(r: &Refinement) -> Option<Formula> {
    match r {
        Refinement::IsZero(s) => Some(Formula::eq(Arith::from_sens(s)?, Arith::int(0))),
        Refinement::IsSucc(s, i) => Some(Formula::eq(Arith::from_sens(s)?, Arith::sum(Arith::var(i), Arith::int(1)))),
    }
}

pub fn refinements_formula(rs: &RefinementSet) -> Option<Formula> {
    let parts: Option<Vec<Formula>> = rs.iter().map(refinement_formula).collect();
    Some(Formula::and(parts?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smart_connectives() {
        assert_eq!(Formula::and(vec![Formula::True, Formula::True]), Formula::True);
        assert_eq!(Formula::or(vec![Formula::False]), Formula::False);
        let a = Formula::ge(Arith::var("x"), Arith::int(0));
        assert_eq!(Formula::and(vec![Formula::True, a.clone()]), a);
        assert_eq!(Formula::implies(Formula::True, a.clone()), a);
    }

    #[test]
    fn quantifier_bookkeeping() {
        let body = Formula::ge(Arith::var("i"), Arith::var("r"));
        let f = Formula::forall("i", Sort::Nat, Formula::exists("r", Sort::SensReal, body));
        assert_eq!(f.count_exists(), 1);
        assert!(f.is_closed());
        assert_eq!(
            Formula::exists("r", Sort::SensReal, Formula::ge(Arith::var("i"), Arith::var("r"))).free_vars(),
            BTreeSet::from(["i".to_string()])
        );
    }

    #[test]
    fn standard_terms_translate() {
        let s = SensExpr::plus(SensExpr::times(SensExpr::num(2), SensExpr::var("i")), SensExpr::one());
        assert_eq!(Arith::from_sens(&s).unwrap().to_string(), "((2 * i) + 1)");
        assert!(Arith::from_sens(&SensExpr::inf()).is_none());
        assert!(Arith::from_sens(&SensExpr::max(SensExpr::one(), SensExpr::one())).is_none());
    }
}
