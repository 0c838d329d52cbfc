use num_rational::BigRational;
use num_traits::Signed;

use super::SourceProgram;
use crate::ast::{SensExpr, Term, TermKind, Type, TypeArg};
use crate::ext_real::fmt_rational;

/// Values with a concrete-syntax rendering.
pub trait Pretty {
    fn pretty(&self) -> String;
}

impl Pretty for SensExpr {
    fn pretty(&self) -> String {
        pretty_sens(self)
    }
}

impl Pretty for Type {
    fn pretty(&self) -> String {
        pretty_type(self)
    }
}

impl Pretty for Term {
    fn pretty(&self) -> String {
        pretty_term(self)
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum SPrec {
    Top,
    Sum,
    Prod,
    Atom,
}

pub fn pretty_sens(s: &SensExpr) -> String {
    let mut out = String::new();
    sens_into(s, SPrec::Top, &mut out);
    out
}

fn sens_into(s: &SensExpr, ctx: SPrec, out: &mut String) {
    let (prec, operand_safe) = match s {
        SensExpr::Plus(..) => (SPrec::Sum, true),
        SensExpr::Times(..) => (SPrec::Prod, true),
        SensExpr::Sup { .. } => (SPrec::Atom, false),
        _ => (SPrec::Atom, true),
    };
    let wrap = prec < ctx || (!operand_safe && ctx != SPrec::Top);
    if wrap {
        out.push('(');
    }
    match s {
        SensExpr::Const(c) => out.push_str(&c.to_string()),
        SensExpr::Var(v) => out.push_str(v),
        SensExpr::Plus(a, b) => {
            sens_into(a, SPrec::Sum, out);
            out.push_str(" + ");
            sens_into(b, SPrec::Prod, out);
        }
        SensExpr::Times(a, b) => {
            sens_into(a, SPrec::Prod, out);
            out.push_str(" * ");
            sens_into(b, SPrec::Atom, out);
        }
        SensExpr::Max(a, b) => {
            out.push_str("max(");
            sens_into(a, SPrec::Top, out);
            out.push_str(", ");
            sens_into(b, SPrec::Top, out);
            out.push(')');
        }
        SensExpr::Sup { binder, kind, body } => {
            out.push_str(&format!("sup ({binder} : {kind}) . "));
            sens_into(body, SPrec::Top, out);
        }
        SensExpr::Case {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            out.push_str("scase ");
            sens_into(scrutinee, SPrec::Top, out);
            out.push_str(" { 0 => ");
            sens_into(zero, SPrec::Top, out);
            out.push_str(&format!(" | {binder} + 1 => "));
            sens_into(succ, SPrec::Top, out);
            out.push_str(" }");
        }
    }
    if wrap {
        out.push(')');
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum TPrec {
    Top,
    Prod,
    Atom,
}

pub fn pretty_type(t: &Type) -> String {
    let mut out = String::new();
    type_into(t, TPrec::Top, &mut out);
    out
}

fn type_into(t: &Type, ctx: TPrec, out: &mut String) {
    let prec = match t {
        Type::Forall { .. } | Type::Lollipop { .. } => TPrec::Top,
        Type::Tensor(..) | Type::With(..) => TPrec::Prod,
        _ => TPrec::Atom,
    };
    let wrap = prec < ctx;
    if wrap {
        out.push('(');
    }
    match t {
        Type::Real => out.push_str("real"),
        Type::RealSingleton(s) => out.push_str(&format!("real[{}]", pretty_sens(s))),
        Type::NatSingleton(s) => out.push_str(&format!("nat[{}]", pretty_sens(s))),
        Type::Lollipop { ann, dom, cod } => {
            out.push_str(&format!("![{}] ", pretty_sens(ann)));
            type_into(dom, TPrec::Prod, out);
            out.push_str(" -o ");
            type_into(cod, TPrec::Top, out);
        }
        Type::Forall { binder, kind, body } => {
            out.push_str(&format!("forall {binder} : {kind} . "));
            type_into(body, TPrec::Top, out);
        }
        Type::Tensor(a, b) | Type::With(a, b) => {
            let op = if matches!(t, Type::Tensor(..)) { " * " } else { " & " };
            type_into(a, TPrec::Prod, out);
            out.push_str(op);
            type_into(b, TPrec::Atom, out);
        }
        Type::Opaque { name, args } => {
            out.push_str(name);
            if !args.is_empty() {
                out.push('<');
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    match a {
                        TypeArg::Type(t) => type_into(t, TPrec::Top, out),
                        TypeArg::Index(s) => out.push_str(&format!("[{}]", pretty_sens(s))),
                    }
                }
                out.push('>');
            }
        }
    }
    if wrap {
        out.push(')');
    }
}

/// `Open` terms (`let`, `case`) extend to the right and need parentheses
/// in function, argument and prefix-operand positions.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum EPrec {
    Tail,
    App,
    Prefix,
    Postfix,
}

fn real_lit(q: &BigRational) -> String {
    if q.is_integer() {
        format!("{}.0", q.numer())
    } else if q.is_negative() {
        format!("-{}", fmt_rational(&-q.clone()))
    } else {
        fmt_rational(q)
    }
}

pub fn pretty_term(t: &Term) -> String {
    let mut out = String::new();
    term_into(t, EPrec::Tail, &mut out);
    out
}

fn term_into(t: &Term, ctx: EPrec, out: &mut String) {
    let prec = match &t.kind {
        TermKind::LetPair { .. } | TermKind::NatCase { .. } => EPrec::Tail,
        TermKind::App(..) => EPrec::App,
        TermKind::Succ(_) | TermKind::Proj(..) => EPrec::Prefix,
        _ => EPrec::Postfix,
    };
    let wrap = prec < ctx;
    if wrap {
        out.push('(');
    }
    match &t.kind {
        TermKind::Var(v) | TermKind::Prim(v) => out.push_str(v),
        TermKind::RealLit(q) => out.push_str(&real_lit(q)),
        TermKind::NatLit(n) => out.push_str(&n.to_string()),
        TermKind::Succ(e) => {
            out.push_str("succ ");
            term_into(e, EPrec::Prefix, out);
        }
        TermKind::Proj(i, e) => {
            out.push_str(&format!("pi{i} "));
            term_into(e, EPrec::Prefix, out);
        }
        TermKind::Fix { name, ann, body } => {
            out.push_str(&format!("fix ({name} : {}) {{ ", pretty_type(ann)));
            term_into(body, EPrec::Tail, out);
            out.push_str(" }");
        }
        TermKind::Lam {
            name,
            ann,
            ty,
            body,
        } => {
            out.push_str(&format!("fun ({name} :[{}] {}) {{ ", pretty_sens(ann), pretty_type(ty)));
            term_into(body, EPrec::Tail, out);
            out.push_str(" }");
        }
        TermKind::App(f, a) => {
            term_into(f, EPrec::App, out);
            out.push(' ');
            term_into(a, EPrec::Prefix, out);
        }
        TermKind::IdxLam { binder, kind, body } => {
            out.push_str(&format!("idxlam ({binder} : {kind}) {{ "));
            term_into(body, EPrec::Tail, out);
            out.push_str(" }");
        }
        TermKind::IdxApp(e, s) => {
            term_into(e, EPrec::Postfix, out);
            out.push_str(&format!("[{}]", pretty_sens(s)));
        }
        TermKind::WithPair(a, b) => {
            out.push('<');
            term_into(a, EPrec::Tail, out);
            out.push_str(", ");
            term_into(b, EPrec::Tail, out);
            out.push('>');
        }
        TermKind::TensorPair(a, b) => {
            out.push('(');
            term_into(a, EPrec::Tail, out);
            out.push_str(", ");
            term_into(b, EPrec::Tail, out);
            out.push(')');
        }
        TermKind::LetPair {
            left,
            right,
            bound,
            body,
        } => {
            out.push_str(&format!("let ({left}, {right}) = "));
            term_into(bound, EPrec::Tail, out);
            out.push_str(" in ");
            term_into(body, EPrec::Tail, out);
        }
        TermKind::NatCase {
            scrutinee,
            ret,
            zero,
            pred_var,
            pred_idx,
            succ,
        } => {
            out.push_str("case ");
            term_into(scrutinee, EPrec::Tail, out);
            out.push_str(&format!(" return {} of 0 => ", pretty_type(ret)));
            term_into(zero, EPrec::Tail, out);
            out.push_str(&format!(" | {pred_var}[{pred_idx}] + 1 => "));
            term_into(succ, EPrec::Tail, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

pub fn pretty_program(p: &SourceProgram) -> String {
    let mut out = String::new();
    for (name, ty) in &p.prelude {
        out.push_str(&format!("primitive {name} : {};\n", pretty_type(ty)));
    }
    match &p.goal {
        Some(goal) => out.push_str(&format!("check {} : {}\n", pretty_term(&p.body), pretty_type(goal))),
        None => {
            out.push_str(&pretty_term(&p.body));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Kind;
    use crate::syntax::{parse_sens, parse_term, parse_type};

    #[test]
    fn sens_examples() {
        assert_eq!(pretty_sens(&SensExpr::max(SensExpr::num(2), SensExpr::var("r"))), "max(2, r)");
        assert_eq!(pretty_sens(&SensExpr::sup("i", Kind::Sens, SensExpr::var("i"))), "sup (i : sens) . i");
        assert_eq!(
            pretty_sens(&SensExpr::case(SensExpr::var("S"), SensExpr::num(5), "j", SensExpr::var("j"))),
            "scase S { 0 => 5 | j + 1 => j }"
        );
    }

    #[test]
    fn association_is_preserved() {
        for src in ["a + (b + c)", "(a + b) * c", "a * (b * c)", "(sup (i : size) . i) + 1", "2 * (sup (i : sens) . i * i)"] {
            let s = parse_sens(src).unwrap();
            assert_eq!(parse_sens(&pretty_sens(&s)).unwrap(), s, "{src}");
        }
    }

    #[test]
    fn type_roundtrip() {
        for src in [
            "forall i : size . ![0] nat[i] -o ![i] real -o real & real",
            "(![1] real -o real) * real",
            "![2] (![1] real -o real) -o real",
            "list<[n], real>",
        ] {
            let t = parse_type(src).unwrap();
            assert!(parse_type(&pretty_type(&t)).unwrap().alpha_eq(&t), "{src}");
        }
    }

    #[test]
    fn term_roundtrip() {
        for src in [
            "f (case n return real of 0 => x | m[j] + 1 => y) z",
            "let (a, b) = p in <pi1 a, succ b>",
            "fix (f : ![1] real -o real) { fun (x :[1] real) { f x } }",
            "g[i + 1] (-1/3) 2.0",
        ] {
            let t = parse_term(src, &["g", "f"]).unwrap();
            let back = parse_term(&pretty_term(&t), &["g", "f"]).unwrap();
            assert_eq!(pretty_term(&back), pretty_term(&t), "{src}");
        }
    }
}
