use std::fmt::Write;

use num_rational::BigRational;
use num_traits::One;

use crate::constraints::{Arith, Formula, Mode, Sort};

const BUILTINS: &[&str] = &[
    "abs", "and", "as", "assert", "distinct", "div", "exists", "false", "forall", "ite", "let", "mod", "not", "or",
    "par", "to_int", "to_real", "is_int", "true", "xor", "_", "!",
];

/// An SMT-LIB symbol for an index name, quoted when needed.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple && !BUILTINS.contains(&name) {
        name.to_string()
    } else {
        format!("|{}|", name.replace(['|', '\\'], "_"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SmtSort {
    Int,
    Real,
}

impl SmtSort {
    fn name(self) -> &'static str {
        match self {
            SmtSort::Int => "Int",
            SmtSort::Real => "Real",
        }
    }
}

fn smt_sort(s: Sort, mode: Mode) -> SmtSort {
    match (mode, s) {
        (Mode::Mixed, Sort::Nat) => SmtSort::Int,
        _ => SmtSort::Real,
    }
}

struct Emitter {
    mode: Mode,
    scopes: Vec<(String, SmtSort)>,
}

impl Emitter {
    fn sort_of_var(&self, v: &str) -> SmtSort {
        self.scopes
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, s)| *s)
            .unwrap_or(SmtSort::Real)
    }

    fn sort_of(&self, a: &Arith) -> SmtSort {
        match a {
            Arith::Var(v) => self.sort_of_var(v),
            Arith::Const(q) => {
                if q.is_integer() {
                    SmtSort::Int
                } else {
                    SmtSort::Real
                }
            }
            Arith::Add(x, y) | Arith::Mul(x, y) => {
                if self.sort_of(x) == SmtSort::Int && self.sort_of(y) == SmtSort::Int {
                    SmtSort::Int
                } else {
                    SmtSort::Real
                }
            }
        }
    }

    fn arith(&self, a: &Arith, want: SmtSort) -> String {
        let have = self.sort_of(a);
        match a {
            Arith::Const(q) => constant(q, want),
            Arith::Var(v) => {
                if have == SmtSort::Int && want == SmtSort::Real {
                    format!("(to_real {})", symbol(v))
                } else {
                    symbol(v)
                }
            }
            Arith::Add(x, y) | Arith::Mul(x, y) => {
                let op = if matches!(a, Arith::Add(..)) { "+" } else { "*" };
                let inner = if have == SmtSort::Int { SmtSort::Int } else { want };
                let body = format!("({op} {} {})", self.arith(x, inner), self.arith(y, inner));
                if have == SmtSort::Int && want == SmtSort::Real {
                    format!("(to_real {body})")
                } else {
                    body
                }
            }
        }
    }

    fn formula(&mut self, f: &Formula, out: &mut String) {
        match f {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Cmp(op, l, r) => {
                let s = if self.sort_of(l) == SmtSort::Int && self.sort_of(r) == SmtSort::Int {
                    SmtSort::Int
                } else {
                    SmtSort::Real
                };
                let _ = write!(out, "({} {} {})", op.symbol(), self.arith(l, s), self.arith(r, s));
            }
            Formula::And(ps) | Formula::Or(ps) => {
                out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
                for p in ps {
                    out.push(' ');
                    self.formula(p, out);
                }
                out.push(')');
            }
            Formula::Implies(a, b) => {
                out.push_str("(=> ");
                self.formula(a, out);
                out.push(' ');
                self.formula(b, out);
                out.push(')');
            }
            Formula::Not(a) => {
                out.push_str("(not ");
                self.formula(a, out);
                out.push(')');
            }
            Formula::ForAll(v, s, body) | Formula::Exists(v, s, body) => {
                let forall = matches!(f, Formula::ForAll(..));
                let sort = smt_sort(*s, self.mode);
                let sym = symbol(v);
                let _ = write!(
                    out,
                    "({} (({sym} {})) ({} {} ",
                    if forall { "forall" } else { "exists" },
                    sort.name(),
                    if forall { "=>" } else { "and" },
                    nonneg(&sym, sort)
                );
                self.scopes.push((v.clone(), sort));
                self.formula(body, out);
                self.scopes.pop();
                out.push_str("))");
            }
        }
    }
}

fn nonneg(sym: &str, sort: SmtSort) -> String {
    match sort {
        SmtSort::Int => format!("(>= {sym} 0)"),
        SmtSort::Real => format!("(>= {sym} 0.0)"),
    }
}

fn constant(q: &BigRational, want: SmtSort) -> String {
    match want {
        SmtSort::Int => q.numer().to_string(),
        SmtSort::Real => {
            if q.denom().is_one() {
                format!("{}.0", q.numer())
            } else {
                format!("(/ {}.0 {}.0)", q.numer(), q.denom())
            }
        }
    }
}

/// Validity query for a closed formula: its negation is asserted, so
/// `unsat` means valid.
pub fn emit_smtlib(f: &Formula, mode: Mode) -> String {
    let mut e = Emitter {
        mode,
        scopes: Vec::new(),
    };
    let mut body = String::new();
    e.formula(f, &mut body);
    format!("(set-logic ALL)\n(assert (not {body}))\n(check-sat)\n")
}

/// Variables declared as constants by [`emit_query`], with their sorts.
pub type Declared = Vec<(String, Sort)>;

/// The script actually sent to a solver. The leading universal prefix is
/// replaced by constants so that a model can be read back with
/// `get-value`; the script is equisatisfiable with [`emit_smtlib`].
pub fn emit_query(f: &Formula, mode: Mode) -> (String, Declared) {
    let mut declared = Vec::new();
    let mut cur = f;
    while let Formula::ForAll(v, s, body) = cur {
        if declared.iter().any(|(n, _): &(String, Sort)| n == v) {
            break;
        }
        declared.push((v.clone(), *s));
        cur = body;
    }
    let mut e = Emitter {
        mode,
        scopes: declared.iter().map(|(n, s)| (n.clone(), smt_sort(*s, mode))).collect(),
    };
    let mut out = String::from("(set-logic ALL)\n");
    for (n, s) in &declared {
        let sort = smt_sort(*s, mode);
        let sym = symbol(n);
        let _ = writeln!(out, "(declare-const {sym} {})", sort.name());
        let _ = writeln!(out, "(assert {})", nonneg(&sym, sort));
    }
    let mut body = String::new();
    e.formula(cur, &mut body);
    let _ = writeln!(out, "(assert (not {body}))");
    out.push_str("(check-sat)\n");
    if !declared.is_empty() {
        let syms: Vec<String> = declared.iter().map(|(n, _)| symbol(n)).collect();
        let _ = writeln!(out, "(get-value ({}))", syms.join(" "));
    }
    (out, declared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Formula;

    fn square_ge(sort: Sort) -> Formula {
        Formula::forall(
            "i",
            sort,
            Formula::ge(Arith::product(Arith::var("i"), Arith::var("i")), Arith::var("i")),
        )
    }

    #[test]
    fn spec_shapes() {
        assert_eq!(
            emit_smtlib(&Formula::True, Mode::Mixed),
            "(set-logic ALL)\n(assert (not true))\n(check-sat)\n"
        );
        let text = emit_smtlib(&square_ge(Sort::Nat), Mode::Mixed);
        assert!(text.contains("(assert (not (forall ((i Int)) (=> (>= i 0) (>= (* i i) i)))))"), "{text}");
        let text = emit_smtlib(&square_ge(Sort::Nat), Mode::Uniform);
        assert!(text.contains("(forall ((i Real)) (=> (>= i 0.0) (>= (* i i) i)))"), "{text}");
    }

    #[test]
    fn mixed_sorts_are_coerced() {
        let f = Formula::forall(
            "i",
            Sort::Nat,
            Formula::forall(
                "r",
                Sort::SensReal,
                Formula::ge(Arith::sum(Arith::var("i"), Arith::var("r")), Arith::Const(BigRational::new(1.into(), 2.into()))),
            ),
        );
        let text = emit_smtlib(&f, Mode::Mixed);
        assert!(text.contains("(>= (+ (to_real i) r) (/ 1.0 2.0))"), "{text}");
    }

    #[test]
    fn quoting_and_determinism() {
        assert_eq!(symbol("i'2"), "|i'2|");
        assert_eq!(symbol("div"), "|div|");
        assert_eq!(symbol("r1"), "r1");
        let f = square_ge(Sort::Nat);
        assert_eq!(emit_smtlib(&f, Mode::Mixed), emit_smtlib(&f, Mode::Mixed));
    }

    #[test]
    fn query_declares_prefix() {
        let (text, declared) = emit_query(&square_ge(Sort::Nat), Mode::Mixed);
        assert_eq!(declared, vec![("i".to_string(), Sort::Nat)]);
        assert!(text.contains("(declare-const i Int)"));
        assert!(text.contains("(assert (not (>= (* i i) i)))"));
        assert!(text.ends_with("(get-value (i))\n"));
    }
}
