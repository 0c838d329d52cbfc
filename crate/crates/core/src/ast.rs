//! Index terms, types, terms and index environments.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::ext_real::ExtReal;

/// A source position, 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Index kinds: sizes (naturals) and sensitivities (extended reals).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Size,
    Sens,
}

impl Kind {
    /// `Size` is usable wherever `Sens` is expected.
    pub fn fits(self, expected: Kind) -> bool {
        self == expected || (self == Kind::Size && expected == Kind::Sens)
    }

    pub fn join(self, other: Kind) -> Kind {
        if self == Kind::Size && other == Kind::Size {
            Kind::Size
        } else {
            Kind::Sens
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Size => "size",
            Kind::Sens => "sens",
        })
    }
}

/// Sensitivity and size index terms, including the extended constructs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SensExpr {
    Const(ExtReal),
    Var(String),
    Plus(Box<SensExpr>, Box<SensExpr>),
    Times(Box<SensExpr>, Box<SensExpr>),
    Max(Box<SensExpr>, Box<SensExpr>),
    Sup {
        binder: String,
        kind: Kind,
        body: Box<SensExpr>,
    },
    Case {
        scrutinee: Box<SensExpr>,
        zero: Box<SensExpr>,
        binder: String,
        succ: Box<SensExpr>,
    },
}

/// Returns `base` if it is not avoided, otherwise the first of `base'`,
/// `base'2`, `base'3`, ... that is not avoided.
pub fn fresh_name(base: &str, avoid: impl Fn(&str) -> bool) -> String {
    let stem = base.split('\'').next().unwrap_or(base);
    let stem = if stem.is_empty() { "v" } else { stem };
    if !avoid(base) {
        return base.to_string();
    }
    let first = format!("{stem}'");
    if !avoid(&first) {
        return first;
    }
    let mut k = 2u64;
    loop {
        let cand = format!("{stem}'{k}");
        if !avoid(&cand) {
            return cand;
        }
        k += 1;
    }
}

impl SensExpr {
    pub fn num(n: i64) -> Self {
        SensExpr::Const(ExtReal::from_int(n))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        SensExpr::Const(ExtReal::from_ratio(p, q))
    }

    pub fn inf() -> Self {
        SensExpr::Const(ExtReal::Infinity)
    }

    pub fn zero() -> Self {
        SensExpr::Const(ExtReal::zero())
    }

    pub fn one() -> Self {
        SensExpr::Const(ExtReal::one())
    }

    pub fn var(name: &str) -> Self {
        SensExpr::Var(name.to_string())
    }

    pub fn plus(a: SensExpr, b: SensExpr) -> Self {
        SensExpr::Plus(Box::new(a), Box::new(b))
    }

    pub fn times(a: SensExpr, b: SensExpr) -> Self {
        SensExpr::Times(Box::new(a), Box::new(b))
    }

    pub fn max(a: SensExpr, b: SensExpr) -> Self {
        SensExpr::Max(Box::new(a), Box::new(b))
    }

    pub fn sup(binder: &str, kind: Kind, body: SensExpr) -> Self {
        SensExpr::Sup {
            binder: binder.to_string(),
            kind,
            body: Box::new(body),
        }
    }

    pub fn case(scrutinee: SensExpr, zero: SensExpr, binder: &str, succ: SensExpr) -> Self {
        SensExpr::Case {
            scrutinee: Box::new(scrutinee),
            zero: Box::new(zero),
            binder: binder.to_string(),
            succ: Box::new(succ),
        }
    }

    pub fn as_const(&self) -> Option<&ExtReal> {
        match self {
            SensExpr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self, SensExpr::Const(c) if c.is_zero())
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, SensExpr::Const(ExtReal::Infinity))
    }

    /// No `Max`, `Sup` or `Case` nodes.
    pub fn is_standard(&self) -> bool {
        match self {
            SensExpr::Const(_) | SensExpr::Var(_) => true,
            SensExpr::Plus(a, b) | SensExpr::Times(a, b) => a.is_standard() && b.is_standard(),
            _ => false,
        }
    }

    pub fn contains_infinity(&self) -> bool {
        match self {
            SensExpr::Const(c) => c.is_infinite(),
            SensExpr::Var(_) => false,
            SensExpr::Plus(a, b) | SensExpr::Times(a, b) | SensExpr::Max(a, b) => {
                a.contains_infinity() || b.contains_infinity()
            }
            SensExpr::Sup { body, .. } => body.contains_infinity(),
            SensExpr::Case {
                scrutinee,
                zero,
                succ,
                ..
            } => scrutinee.contains_infinity() || zero.contains_infinity() || succ.contains_infinity(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            SensExpr::Const(_) | SensExpr::Var(_) => 1,
            SensExpr::Plus(a, b) | SensExpr::Times(a, b) | SensExpr::Max(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            SensExpr::Sup { body, .. } => 1 + body.node_count(),
            SensExpr::Case {
                scrutinee,
                zero,
                succ,
                ..
            } => 1 + scrutinee.node_count() + zero.node_count() + succ.node_count(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            SensExpr::Const(_) => {}
            SensExpr::Var(v) => {
                if !bound.iter().any(|b| b == v) {
                    out.insert(v.clone());
                }
            }
            SensExpr::Plus(a, b) | SensExpr::Times(a, b) | SensExpr::Max(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            SensExpr::Sup { binder, body, .. } => {
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            SensExpr::Case {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                scrutinee.collect_free(bound, out);
                zero.collect_free(bound, out);
                bound.push(binder.clone());
                succ.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// All names occurring anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            SensExpr::Const(_) => {}
            SensExpr::Var(v) => {
                out.insert(v.clone());
            }
            SensExpr::Plus(a, b) | SensExpr::Times(a, b) | SensExpr::Max(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            SensExpr::Sup { binder, body, .. } => {
                out.insert(binder.clone());
                body.all_names(out);
            }
            SensExpr::Case {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                out.insert(binder.clone());
                scrutinee.all_names(out);
                zero.all_names(out);
                succ.all_names(out);
            }
        }
    }

    pub fn occurs_free(&self, var: &str) -> bool {
        match self {
            SensExpr::Const(_) => false,
            SensExpr::Var(v) => v == var,
            SensExpr::Plus(a, b) | SensExpr::Times(a, b) | SensExpr::Max(a, b) => {
                a.occurs_free(var) || b.occurs_free(var)
            }
            SensExpr::Sup { binder, body, .. } => binder != var && body.occurs_free(var),
            SensExpr::Case {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                scrutinee.occurs_free(var)
                    || zero.occurs_free(var)
                    || (binder != var && succ.occurs_free(var))
            }
        }
    }

    /// Capture-avoiding substitution of `repl` for free occurrences of `var`.
    pub fn subst(&self, var: &str, repl: &SensExpr) -> SensExpr {
        if !self.occurs_free(var) {
            return self.clone();
        }
        let repl_fv = repl.free_vars();
        self.subst_inner(var, repl, &repl_fv)
    }

    fn subst_inner(&self, var: &str, repl: &SensExpr, repl_fv: &BTreeSet<String>) -> SensExpr {
        match self {
            SensExpr::Const(_) => self.clone(),
            SensExpr::Var(v) => {
                if v == var {
                    repl.clone()
                } else {
                    self.clone()
                }
            }
            SensExpr::Plus(a, b) => SensExpr::plus(
                a.subst_inner(var, repl, repl_fv),
                b.subst_inner(var, repl, repl_fv),
            ),
            SensExpr::Times(a, b) => SensExpr::times(
                a.subst_inner(var, repl, repl_fv),
                b.subst_inner(var, repl, repl_fv),
            ),
            SensExpr::Max(a, b) => SensExpr::max(
                a.subst_inner(var, repl, repl_fv),
                b.subst_inner(var, repl, repl_fv),
            ),
            SensExpr::Sup { binder, kind, body } => {
                if binder == var || !body.occurs_free(var) {
                    return self.clone();
                }
                let (b, body) = rename_for_subst(binder, body, var, repl_fv);
                SensExpr::sup(&b, *kind, body.subst_inner(var, repl, repl_fv))
            }
            SensExpr::Case {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                let s = scrutinee.subst_inner(var, repl, repl_fv);
                let z = zero.subst_inner(var, repl, repl_fv);
                if binder == var || !succ.occurs_free(var) {
                    return SensExpr::case(s, z, binder, (**succ).clone());
                }
                let (b, succ) = rename_for_subst(binder, succ, var, repl_fv);
                SensExpr::case(s, z, &b, succ.subst_inner(var, repl, repl_fv))
            }
        }
    }

    /// Simultaneous substitution, applied left to right.
    pub fn subst_all(&self, map: &[(String, SensExpr)]) -> SensExpr {
        let mut out = self.clone();
        for (v, r) in map {
            out = out.subst(v, r);
        }
        out
    }

    /// Renames a bound variable occurrence in a body; `new` must be fresh.
    pub fn rename_free(&self, old: &str, new: &str) -> SensExpr {
        self.subst(old, &SensExpr::Var(new.to_string()))
    }

    pub fn alpha_eq(&self, other: &SensExpr) -> bool {
        alpha_eq_sens(self, other, &mut Vec::new())
    }
}

fn rename_for_subst(
    binder: &str,
    body: &SensExpr,
    var: &str,
    repl_fv: &BTreeSet<String>,
) -> (String, SensExpr) {
    if !repl_fv.contains(binder) {
        return (binder.to_string(), body.clone());
    }
    let body_fv = body.free_vars();
    let fresh = fresh_name(binder, |n| {
        repl_fv.contains(n) || body_fv.contains(n) || n == var
    });
    let renamed = body.rename_free(binder, &fresh);
    (fresh, renamed)
}

fn lookup_pair(pairs: &[(String, String)], a: &str, b: &str) -> bool {
    for (x, y) in pairs.iter().rev() {
        if x == a || y == b {
            return x == a && y == b;
        }
    }
    a == b
}

fn alpha_eq_sens(a: &SensExpr, b: &SensExpr, pairs: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (SensExpr::Const(x), SensExpr::Const(y)) => x == y,
        (SensExpr::Var(x), SensExpr::Var(y)) => lookup_pair(pairs, x, y),
        (SensExpr::Plus(a1, a2), SensExpr::Plus(b1, b2))
        | (SensExpr::Times(a1, a2), SensExpr::Times(b1, b2))
        | (SensExpr::Max(a1, a2), SensExpr::Max(b1, b2)) => {
            alpha_eq_sens(a1, b1, pairs) && alpha_eq_sens(a2, b2, pairs)
        }
        (
            SensExpr::Sup {
                binder: x,
                kind: k1,
                body: b1,
            },
            SensExpr::Sup {
                binder: y,
                kind: k2,
                body: b2,
            },
        ) => {
            if k1 != k2 {
                return false;
            }
            pairs.push((x.clone(), y.clone()));
            let r = alpha_eq_sens(b1, b2, pairs);
            pairs.pop();
            r
        }
        (
            SensExpr::Case {
                scrutinee: s1,
                zero: z1,
                binder: x,
                succ: t1,
            },
            SensExpr::Case {
                scrutinee: s2,
                zero: z2,
                binder: y,
                succ: t2,
            },
        ) => {
            if !alpha_eq_sens(s1, s2, pairs) || !alpha_eq_sens(z1, z2, pairs) {
                return false;
            }
            pairs.push((x.clone(), y.clone()));
            let r = alpha_eq_sens(t1, t2, pairs);
            pairs.pop();
            r
        }
        _ => false,
    }
}

// Simplifying constructors. Each rewrite is a semantic identity of the
// absorbing algebra; `0 · x` is never folded because `x` may be infinite.

pub fn mk_plus(a: SensExpr, b: SensExpr) -> SensExpr {
    match (&a, &b) {
        (SensExpr::Const(x), SensExpr::Const(y)) => SensExpr::Const(x + y),
        (SensExpr::Const(x), _) if x.is_infinite() => a,
        (_, SensExpr::Const(y)) if y.is_infinite() => b,
        (SensExpr::Const(x), _) if x.is_zero() => b,
        (_, SensExpr::Const(y)) if y.is_zero() => a,
        _ => SensExpr::plus(a, b),
    }
}

pub fn mk_times(a: SensExpr, b: SensExpr) -> SensExpr {
    match (&a, &b) {
        (SensExpr::Const(x), SensExpr::Const(y)) => SensExpr::Const(x * y),
        (SensExpr::Const(x), _) if x.is_infinite() => a,
        (_, SensExpr::Const(y)) if y.is_infinite() => b,
        (SensExpr::Const(x), _) if x.is_one() => b,
        (_, SensExpr::Const(y)) if y.is_one() => a,
        _ => SensExpr::times(a, b),
    }
}

pub fn mk_max(a: SensExpr, b: SensExpr) -> SensExpr {
    match (&a, &b) {
        (SensExpr::Const(x), SensExpr::Const(y)) => SensExpr::Const(x.clone().max(y.clone())),
        (SensExpr::Const(x), _) if x.is_infinite() => a,
        (_, SensExpr::Const(y)) if y.is_infinite() => b,
        (SensExpr::Const(x), _) if x.is_zero() => b,
        (_, SensExpr::Const(y)) if y.is_zero() => a,
        _ if a.alpha_eq(&b) => a,
        _ => SensExpr::max(a, b),
    }
}

pub fn mk_sup(binder: &str, kind: Kind, body: SensExpr) -> SensExpr {
    if !body.occurs_free(binder) {
        return body;
    }
    SensExpr::sup(binder, kind, body)
}

pub fn mk_case(scrutinee: SensExpr, zero: SensExpr, binder: &str, succ: SensExpr) -> SensExpr {
    if let SensExpr::Const(c) = &scrutinee {
        if c.is_zero() {
            return zero;
        }
        if c.is_infinite() || c.is_natural() {
            return succ.subst(binder, &SensExpr::Const(c.pred()));
        }
    }
    if !succ.occurs_free(binder) && zero.alpha_eq(&succ) {
        return zero;
    }
    SensExpr::case(scrutinee, zero, binder, succ)
}

/// Rebuilds `s` bottom-up through the simplifying constructors.
pub fn fold(s: &SensExpr) -> SensExpr {
    match s {
        SensExpr::Const(_) | SensExpr::Var(_) => s.clone(),
        SensExpr::Plus(a, b) => mk_plus(fold(a), fold(b)),
        SensExpr::Times(a, b) => mk_times(fold(a), fold(b)),
        SensExpr::Max(a, b) => mk_max(fold(a), fold(b)),
        SensExpr::Sup { binder, kind, body } => {
            let body = fold(body);
            if body.is_infinity() {
                return body;
            }
            mk_sup(binder, *kind, body)
        }
        SensExpr::Case {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            let s = fold(scrutinee);
            if let SensExpr::Const(_) = s {
                return fold(&mk_case(s, (**zero).clone(), binder, (**succ).clone()));
            }
            mk_case(s, fold(zero), binder, fold(succ))
        }
    }
}

/// Ordered index environment φ.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IdxEnv {
    entries: Vec<(String, Kind)>,
}

impl IdxEnv {
    pub fn new() -> Self {
        IdxEnv::default()
    }

    pub fn from_pairs(pairs: &[(&str, Kind)]) -> Self {
        let mut env = IdxEnv::new();
        for (n, k) in pairs {
            env.push(n, *k);
        }
        env
    }

    /// Panics if `name` is already bound.
    pub fn push(&mut self, name: &str, kind: Kind) {
        assert!(!self.contains(name), "index variable {name} bound twice");
        self.entries.push((name.to_string(), kind));
    }

    pub fn extended(&self, name: &str, kind: Kind) -> IdxEnv {
        let mut e = self.clone();
        e.push(name, kind);
        e
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn kind_of(&self, name: &str) -> Option<Kind> {
        self.entries
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Kind)> {
        self.entries.iter().map(|(n, k)| (n.as_str(), *k))
    }

    pub fn names(&self) -> BTreeSet<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Concatenation; panics on a shared name.
    pub fn concat(&self, other: &IdxEnv) -> IdxEnv {
        let mut e = self.clone();
        for (n, k) in other.iter() {
            e.push(n, k);
        }
        e
    }

    pub fn retain(&mut self, keep: impl Fn(&str) -> bool) {
        self.entries.retain(|(n, _)| keep(n));
    }
}

/// Refinements `S = 0` and `S = i + 1` introduced by pattern matching.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Refinement {
    IsZero(SensExpr),
    IsSucc(SensExpr, String),
}

impl Refinement {
    pub fn subst(&self, var: &str, repl: &SensExpr) -> Refinement {
        match self {
            Refinement::IsZero(s) => Refinement::IsZero(s.subst(var, repl)),
            Refinement::IsSucc(s, b) => Refinement::IsSucc(s.subst(var, repl), b.clone()),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Refinement::IsZero(s) => s.free_vars(),
            Refinement::IsSucc(s, b) => {
                let mut v = s.free_vars();
                v.insert(b.clone());
                v
            }
        }
    }

    /// Renames every occurrence of `old`, including a succ binder.
    pub fn rename(&self, old: &str, new: &str) -> Refinement {
        match self {
            Refinement::IsZero(s) => Refinement::IsZero(s.rename_free(old, new)),
            Refinement::IsSucc(s, b) => Refinement::IsSucc(
                s.rename_free(old, new),
                if b == old { new.to_string() } else { b.clone() },
            ),
        }
    }
}

/// A conjunction of refinements Φ.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RefinementSet(pub Vec<Refinement>);

impl RefinementSet {
    pub fn new() -> Self {
        RefinementSet(Vec::new())
    }

    pub fn with(&self, r: Refinement) -> RefinementSet {
        let mut v = self.0.clone();
        v.push(r);
        RefinementSet(v)
    }

    pub fn and(&self, other: &RefinementSet) -> RefinementSet {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        RefinementSet(v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Refinement> {
        self.0.iter()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.0.iter().flat_map(|r| r.free_vars()).collect()
    }

    pub fn rename(&self, old: &str, new: &str) -> RefinementSet {
        RefinementSet(self.0.iter().map(|r| r.rename(old, new)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KindError {
    #[error("unbound index variable `{0}`")]
    Unbound(String),
    #[error("`{0}` has kind sens where a size is required")]
    ExpectedSize(String),
}

/// Infers the most precise kind of `s` under `env`.
pub fn kind_check(env: &IdxEnv, s: &SensExpr) -> Result<Kind, KindError> {
    kind_check_scoped(env, &mut Vec::new(), s)
}

/// Checks that `s` may be used at kind `expected`.
pub fn check_kind(env: &IdxEnv, s: &SensExpr, expected: Kind) -> Result<(), KindError> {
    let k = kind_check(env, s)?;
    if k.fits(expected) {
        Ok(())
    } else {
        Err(KindError::ExpectedSize(crate::syntax::pretty_sens(s)))
    }
}

fn kind_check_scoped(
    env: &IdxEnv,
    local: &mut Vec<(String, Kind)>,
    s: &SensExpr,
) -> Result<Kind, KindError> {
    match s {
        SensExpr::Const(c) => Ok(if c.is_natural() { Kind::Size } else { Kind::Sens }),
        SensExpr::Var(v) => local
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, k)| *k)
            .or_else(|| env.kind_of(v))
            .ok_or_else(|| KindError::Unbound(v.clone())),
        SensExpr::Plus(a, b) | SensExpr::Times(a, b) => {
            let ka = kind_check_scoped(env, local, a)?;
            let kb = kind_check_scoped(env, local, b)?;
            Ok(ka.join(kb))
        }
        SensExpr::Max(a, b) => {
            kind_check_scoped(env, local, a)?;
            kind_check_scoped(env, local, b)?;
            Ok(Kind::Sens)
        }
        SensExpr::Sup { binder, kind, body } => {
            local.push((binder.clone(), *kind));
            let r = kind_check_scoped(env, local, body);
            local.pop();
            r.map(|_| Kind::Sens)
        }
        SensExpr::Case {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            if kind_check_scoped(env, local, scrutinee)? != Kind::Size {
                return Err(KindError::ExpectedSize(crate::syntax::pretty_sens(scrutinee)));
            }
            kind_check_scoped(env, local, zero)?;
            local.push((binder.clone(), Kind::Size));
            let r = kind_check_scoped(env, local, succ);
            local.pop();
            r.map(|_| Kind::Sens)
        }
    }
}

/// Types.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Real,
    RealSingleton(SensExpr),
    NatSingleton(SensExpr),
    Lollipop {
        ann: SensExpr,
        dom: Box<Type>,
        cod: Box<Type>,
    },
    Forall {
        binder: String,
        kind: Kind,
        body: Box<Type>,
    },
    Tensor(Box<Type>, Box<Type>),
    With(Box<Type>, Box<Type>),
    Opaque {
        name: String,
        args: Vec<TypeArg>,
    },
}

/// An argument of an opaque type constructor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeArg {
    Type(Type),
    Index(SensExpr),
}

impl Type {
    pub fn lollipop(ann: SensExpr, dom: Type, cod: Type) -> Type {
        Type::Lollipop {
            ann,
            dom: Box::new(dom),
            cod: Box::new(cod),
        }
    }

    pub fn forall(binder: &str, kind: Kind, body: Type) -> Type {
        Type::Forall {
            binder: binder.to_string(),
            kind,
            body: Box::new(body),
        }
    }

    pub fn tensor(a: Type, b: Type) -> Type {
        Type::Tensor(Box::new(a), Box::new(b))
    }

    pub fn with(a: Type, b: Type) -> Type {
        Type::With(Box::new(a), Box::new(b))
    }

    /// Visits every index term, outermost first.
    pub fn for_each_index(&self, f: &mut impl FnMut(&SensExpr)) {
        match self {
            Type::Real => {}
            Type::RealSingleton(s) | Type::NatSingleton(s) => f(s),
            Type::Lollipop { ann, dom, cod } => {
                f(ann);
                dom.for_each_index(f);
                cod.for_each_index(f);
            }
            Type::Forall { body, .. } => body.for_each_index(f),
            Type::Tensor(a, b) | Type::With(a, b) => {
                a.for_each_index(f);
                b.for_each_index(f);
            }
            Type::Opaque { args, .. } => {
                for a in args {
                    match a {
                        TypeArg::Type(t) => t.for_each_index(f),
                        TypeArg::Index(s) => f(s),
                    }
                }
            }
        }
    }

    /// True when every index term is standard.
    pub fn is_standard(&self) -> bool {
        let mut ok = true;
        self.for_each_index(&mut |s| ok &= s.is_standard());
        ok
    }

    pub fn free_idx_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let add = |s: &SensExpr, bound: &Vec<String>, out: &mut BTreeSet<String>| {
            for v in s.free_vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Type::Real => {}
            Type::RealSingleton(s) | Type::NatSingleton(s) => add(s, bound, out),
            Type::Lollipop { ann, dom, cod } => {
                add(ann, bound, out);
                dom.collect_free(bound, out);
                cod.collect_free(bound, out);
            }
            Type::Forall { binder, body, .. } => {
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Type::Tensor(a, b) | Type::With(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Type::Opaque { args, .. } => {
                for a in args {
                    match a {
                        TypeArg::Type(t) => t.collect_free(bound, out),
                        TypeArg::Index(s) => add(s, bound, out),
                    }
                }
            }
        }
    }

    pub fn occurs_free(&self, var: &str) -> bool {
        self.free_idx_vars().contains(var)
    }

    /// Capture-avoiding substitution of an index term.
    pub fn subst(&self, var: &str, repl: &SensExpr) -> Type {
        if !self.occurs_free(var) {
            return self.clone();
        }
        match self {
            Type::Real => Type::Real,
            Type::RealSingleton(s) => Type::RealSingleton(s.subst(var, repl)),
            Type::NatSingleton(s) => Type::NatSingleton(s.subst(var, repl)),
            Type::Lollipop { ann, dom, cod } => Type::lollipop(
                ann.subst(var, repl),
                dom.subst(var, repl),
                cod.subst(var, repl),
            ),
            Type::Forall { binder, kind, body } => {
                if binder == var {
                    return self.clone();
                }
                let repl_fv = repl.free_vars();
                if repl_fv.contains(binder) {
                    let body_fv = body.free_idx_vars();
                    let fresh = fresh_name(binder, |n| {
                        repl_fv.contains(n) || body_fv.contains(n) || n == var
                    });
                    let renamed = body.subst(binder, &SensExpr::Var(fresh.clone()));
                    Type::forall(&fresh, *kind, renamed.subst(var, repl))
                } else {
                    Type::forall(binder, *kind, body.subst(var, repl))
                }
            }
            Type::Tensor(a, b) => Type::tensor(a.subst(var, repl), b.subst(var, repl)),
            Type::With(a, b) => Type::with(a.subst(var, repl), b.subst(var, repl)),
            Type::Opaque { name, args } => Type::Opaque {
                name: name.clone(),
                args: args
                    .iter()
                    .map(|a| match a {
                        TypeArg::Type(t) => TypeArg::Type(t.subst(var, repl)),
                        TypeArg::Index(s) => TypeArg::Index(s.subst(var, repl)),
                    })
                    .collect(),
            },
        }
    }

    pub fn alpha_eq(&self, other: &Type) -> bool {
        alpha_eq_type(self, other, &mut Vec::new())
    }

    /// Rebuilds every index term through [`fold`].
    pub fn fold_indices(&self) -> Type {
        self.map_indices(&fold)
    }

    pub fn map_indices(&self, f: &impl Fn(&SensExpr) -> SensExpr) -> Type {
        match self {
            Type::Real => Type::Real,
            Type::RealSingleton(s) => Type::RealSingleton(f(s)),
            Type::NatSingleton(s) => Type::NatSingleton(f(s)),
            Type::Lollipop { ann, dom, cod } => {
                Type::lollipop(f(ann), dom.map_indices(f), cod.map_indices(f))
            }
            Type::Forall { binder, kind, body } => Type::forall(binder, *kind, body.map_indices(f)),
            Type::Tensor(a, b) => Type::tensor(a.map_indices(f), b.map_indices(f)),
            Type::With(a, b) => Type::with(a.map_indices(f), b.map_indices(f)),
            Type::Opaque { name, args } => Type::Opaque {
                name: name.clone(),
                args: args
                    .iter()
                    .map(|a| match a {
                        TypeArg::Type(t) => TypeArg::Type(t.map_indices(f)),
                        TypeArg::Index(s) => TypeArg::Index(f(s)),
                    })
                    .collect(),
            },
        }
    }
}

fn alpha_eq_type(a: &Type, b: &Type, pairs: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (Type::Real, Type::Real) => true,
        (Type::RealSingleton(x), Type::RealSingleton(y))
        | (Type::NatSingleton(x), Type::NatSingleton(y)) => alpha_eq_sens(x, y, pairs),
        (
            Type::Lollipop {
                ann: a1,
                dom: d1,
                cod: c1,
            },
            Type::Lollipop {
                ann: a2,
                dom: d2,
                cod: c2,
            },
        ) => {
            alpha_eq_sens(a1, a2, pairs)
                && alpha_eq_type(d1, d2, pairs)
                && alpha_eq_type(c1, c2, pairs)
        }
        (
            Type::Forall {
                binder: x,
                kind: k1,
                body: b1,
            },
            Type::Forall {
                binder: y,
                kind: k2,
                body: b2,
            },
        ) => {
            if k1 != k2 {
                return false;
            }
            pairs.push((x.clone(), y.clone()));
            let r = alpha_eq_type(b1, b2, pairs);
            pairs.pop();
            r
        }
        (Type::Tensor(a1, a2), Type::Tensor(b1, b2)) | (Type::With(a1, a2), Type::With(b1, b2)) => {
            alpha_eq_type(a1, b1, pairs) && alpha_eq_type(a2, b2, pairs)
        }
        (Type::Opaque { name: n1, args: x }, Type::Opaque { name: n2, args: y }) => {
            n1 == n2
                && x.len() == y.len()
                && x.iter().zip(y).all(|(p, q)| match (p, q) {
                    (TypeArg::Type(s), TypeArg::Type(t)) => alpha_eq_type(s, t, pairs),
                    (TypeArg::Index(s), TypeArg::Index(t)) => alpha_eq_sens(s, t, pairs),
                    _ => false,
                })
        }
        _ => false,
    }
}

/// Checks that every index in `ty` is well-kinded under `env`.
pub fn kind_check_type(env: &IdxEnv, ty: &Type) -> Result<(), KindError> {
    match ty {
        Type::Real => Ok(()),
        Type::RealSingleton(s) => check_kind(env, s, Kind::Sens),
        Type::NatSingleton(s) => check_kind(env, s, Kind::Size),
        Type::Lollipop { ann, dom, cod } => {
            check_kind(env, ann, Kind::Sens)?;
            kind_check_type(env, dom)?;
            kind_check_type(env, cod)
        }
        Type::Forall { binder, kind, body } => {
            if env.contains(binder) {
                let fresh = fresh_name(binder, |n| env.contains(n));
                let body = body.subst(binder, &SensExpr::Var(fresh.clone()));
                kind_check_type(&env.extended(&fresh, *kind), &body)
            } else {
                kind_check_type(&env.extended(binder, *kind), body)
            }
        }
        Type::Tensor(a, b) | Type::With(a, b) => {
            kind_check_type(env, a)?;
            kind_check_type(env, b)
        }
        Type::Opaque { args, .. } => {
            for a in args {
                match a {
                    TypeArg::Type(t) => kind_check_type(env, t)?,
                    TypeArg::Index(s) => {
                        kind_check(env, s)?;
                    }
                }
            }
            Ok(())
        }
    }
}

/// A term with its source location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub kind: TermKind,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermKind {
    Var(String),
    /// May be negative.
    RealLit(BigRational),
    NatLit(u64),
    Succ(Box<Term>),
    Fix {
        name: String,
        ann: Type,
        body: Box<Term>,
    },
    Lam {
        name: String,
        ann: SensExpr,
        ty: Type,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    IdxLam {
        binder: String,
        kind: Kind,
        body: Box<Term>,
    },
    IdxApp(Box<Term>, SensExpr),
    WithPair(Box<Term>, Box<Term>),
    /// `1` or `2`.
    Proj(u8, Box<Term>),
    TensorPair(Box<Term>, Box<Term>),
    LetPair {
        left: String,
        right: String,
        bound: Box<Term>,
        body: Box<Term>,
    },
    NatCase {
        scrutinee: Box<Term>,
        ret: Type,
        zero: Box<Term>,
        pred_var: String,
        pred_idx: String,
        succ: Box<Term>,
    },
    Prim(String),
}

impl Term {
    pub fn new(kind: TermKind, loc: Loc) -> Term {
        Term { kind, loc }
    }

    /// A term at the default location, for programmatic construction.
    pub fn at0(kind: TermKind) -> Term {
        Term {
            kind,
            loc: Loc::default(),
        }
    }

    fn with_kind(&self, kind: TermKind) -> Term {
        Term {
            kind,
            loc: self.loc,
        }
    }

    /// Free term variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match &self.kind {
            TermKind::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            TermKind::RealLit(_) | TermKind::NatLit(_) | TermKind::Prim(_) => {}
            TermKind::Succ(e) | TermKind::Proj(_, e) | TermKind::IdxApp(e, _) => {
                e.collect_free(bound, out)
            }
            TermKind::IdxLam { body, .. } => body.collect_free(bound, out),
            TermKind::Fix { name, body, .. } | TermKind::Lam { name, body, .. } => {
                bound.push(name.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            TermKind::App(a, b) | TermKind::WithPair(a, b) | TermKind::TensorPair(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            TermKind::LetPair {
                left,
                right,
                bound: e,
                body,
            } => {
                e.collect_free(bound, out);
                bound.push(left.clone());
                bound.push(right.clone());
                body.collect_free(bound, out);
                bound.pop();
                bound.pop();
            }
            TermKind::NatCase {
                scrutinee,
                zero,
                pred_var,
                succ,
                ..
            } => {
                scrutinee.collect_free(bound, out);
                zero.collect_free(bound, out);
                bound.push(pred_var.clone());
                succ.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Renames free occurrences of term variable `old` to `new`, which must
    /// not occur in the term.
    pub fn rename_var(&self, old: &str, new: &str) -> Term {
        let r = |e: &Term| Box::new(e.rename_var(old, new));
        let kind = match &self.kind {
            TermKind::Var(v) if v == old => TermKind::Var(new.to_string()),
            TermKind::Var(_) | TermKind::RealLit(_) | TermKind::NatLit(_) | TermKind::Prim(_) => {
                self.kind.clone()
            }
            TermKind::Succ(e) => TermKind::Succ(r(e)),
            TermKind::Proj(i, e) => TermKind::Proj(*i, r(e)),
            TermKind::IdxApp(e, s) => TermKind::IdxApp(r(e), s.clone()),
            TermKind::IdxLam { binder, kind, body } => TermKind::IdxLam {
                binder: binder.clone(),
                kind: *kind,
                body: r(body),
            },
            TermKind::Fix { name, .. } | TermKind::Lam { name, .. } if name == old => {
                self.kind.clone()
            }
            TermKind::Fix { name, ann, body } => TermKind::Fix {
                name: name.clone(),
                ann: ann.clone(),
                body: r(body),
            },
            TermKind::Lam {
                name,
                ann,
                ty,
                body,
            } => TermKind::Lam {
                name: name.clone(),
                ann: ann.clone(),
                ty: ty.clone(),
                body: r(body),
            },
            TermKind::App(a, b) => TermKind::App(r(a), r(b)),
            TermKind::WithPair(a, b) => TermKind::WithPair(r(a), r(b)),
            TermKind::TensorPair(a, b) => TermKind::TensorPair(r(a), r(b)),
            TermKind::LetPair {
                left,
                right,
                bound,
                body,
            } => TermKind::LetPair {
                left: left.clone(),
                right: right.clone(),
                bound: r(bound),
                body: if left == old || right == old {
                    body.clone()
                } else {
                    r(body)
                },
            },
            TermKind::NatCase {
                scrutinee,
                ret,
                zero,
                pred_var,
                pred_idx,
                succ,
            } => TermKind::NatCase {
                scrutinee: r(scrutinee),
                ret: ret.clone(),
                zero: r(zero),
                pred_var: pred_var.clone(),
                pred_idx: pred_idx.clone(),
                succ: if pred_var == old { succ.clone() } else { r(succ) },
            },
        };
        self.with_kind(kind)
    }

    /// Free index variables, including those in annotations.
    pub fn free_idx_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_idx(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_idx(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let add_set = |set: BTreeSet<String>, bound: &Vec<String>, out: &mut BTreeSet<String>| {
            for v in set {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match &self.kind {
            TermKind::Var(_) | TermKind::RealLit(_) | TermKind::NatLit(_) | TermKind::Prim(_) => {}
            TermKind::Succ(e) | TermKind::Proj(_, e) => e.collect_free_idx(bound, out),
            TermKind::IdxApp(e, s) => {
                e.collect_free_idx(bound, out);
                add_set(s.free_vars(), bound, out);
            }
            TermKind::IdxLam { binder, body, .. } => {
                bound.push(binder.clone());
                body.collect_free_idx(bound, out);
                bound.pop();
            }
            TermKind::Fix { ann, body, .. } => {
                add_set(ann.free_idx_vars(), bound, out);
                body.collect_free_idx(bound, out);
            }
            TermKind::Lam { ann, ty, body, .. } => {
                add_set(ann.free_vars(), bound, out);
                add_set(ty.free_idx_vars(), bound, out);
                body.collect_free_idx(bound, out);
            }
            TermKind::App(a, b)
            | TermKind::WithPair(a, b)
            | TermKind::TensorPair(a, b)
            | TermKind::LetPair {
                bound: a, body: b, ..
            } => {
                a.collect_free_idx(bound, out);
                b.collect_free_idx(bound, out);
            }
            TermKind::NatCase {
                scrutinee,
                ret,
                zero,
                pred_idx,
                succ,
                ..
            } => {
                scrutinee.collect_free_idx(bound, out);
                add_set(ret.free_idx_vars(), bound, out);
                zero.collect_free_idx(bound, out);
                bound.push(pred_idx.clone());
                succ.collect_free_idx(bound, out);
                bound.pop();
            }
        }
    }

    /// Capture-avoiding substitution of an index term for `var`.
    pub fn subst_idx(&self, var: &str, repl: &SensExpr) -> Term {
        if !self.free_idx_vars().contains(var) {
            return self.clone();
        }
        let repl_fv = repl.free_vars();
        self.subst_idx_inner(var, repl, &repl_fv)
    }

    fn subst_idx_inner(&self, var: &str, repl: &SensExpr, repl_fv: &BTreeSet<String>) -> Term {
        let r = |e: &Term| Box::new(e.subst_idx_inner(var, repl, repl_fv));
        let kind = match &self.kind {
            TermKind::Var(_) | TermKind::RealLit(_) | TermKind::NatLit(_) | TermKind::Prim(_) => {
                self.kind.clone()
            }
            TermKind::Succ(e) => TermKind::Succ(r(e)),
            TermKind::Proj(i, e) => TermKind::Proj(*i, r(e)),
            TermKind::IdxApp(e, s) => TermKind::IdxApp(r(e), s.subst(var, repl)),
            TermKind::IdxLam { binder, kind, body } => {
                if binder == var {
                    self.kind.clone()
                } else if repl_fv.contains(binder) {
                    let body_fv = body.free_idx_vars();
                    let fresh = fresh_name(binder, |n| {
                        repl_fv.contains(n) || body_fv.contains(n) || n == var
                    });
                    let body = body.subst_idx(binder, &SensExpr::Var(fresh.clone()));
                    TermKind::IdxLam {
                        binder: fresh,
                        kind: *kind,
                        body: Box::new(body.subst_idx_inner(var, repl, repl_fv)),
                    }
                } else {
                    TermKind::IdxLam {
                        binder: binder.clone(),
                        kind: *kind,
                        body: r(body),
                    }
                }
            }
            TermKind::Fix { name, ann, body } => TermKind::Fix {
                name: name.clone(),
                ann: ann.subst(var, repl),
                body: r(body),
            },
            TermKind::Lam {
                name,
                ann,
                ty,
                body,
            } => TermKind::Lam {
                name: name.clone(),
                ann: ann.subst(var, repl),
                ty: ty.subst(var, repl),
                body: r(body),
            },
            TermKind::App(a, b) => TermKind::App(r(a), r(b)),
            TermKind::WithPair(a, b) => TermKind::WithPair(r(a), r(b)),
            TermKind::TensorPair(a, b) => TermKind::TensorPair(r(a), r(b)),
            TermKind::LetPair {
                left,
                right,
                bound,
                body,
            } => TermKind::LetPair {
                left: left.clone(),
                right: right.clone(),
                bound: r(bound),
                body: r(body),
            },
            TermKind::NatCase {
                scrutinee,
                ret,
                zero,
                pred_var,
                pred_idx,
                succ,
            } => {
                let (pi, succ) = if pred_idx == var {
                    (pred_idx.clone(), succ.clone())
                } else if repl_fv.contains(pred_idx) {
                    let body_fv = succ.free_idx_vars();
                    let fresh = fresh_name(pred_idx, |n| {
                        repl_fv.contains(n) || body_fv.contains(n) || n == var
                    });
                    let s = succ.subst_idx(pred_idx, &SensExpr::Var(fresh.clone()));
                    (fresh, Box::new(s.subst_idx_inner(var, repl, repl_fv)))
                } else {
                    (pred_idx.clone(), r(succ))
                };
                TermKind::NatCase {
                    scrutinee: r(scrutinee),
                    ret: ret.subst(var, repl),
                    zero: r(zero),
                    pred_var: pred_var.clone(),
                    pred_idx: pi,
                    succ,
                }
            }
        };
        self.with_kind(kind)
    }

    /// True when every annotation in the term is standard.
    pub fn annotations_standard(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |t| match &t.kind {
            TermKind::Lam { ann, ty, .. } => ok &= ann.is_standard() && ty.is_standard(),
            TermKind::Fix { ann, .. } => ok &= ann.is_standard(),
            TermKind::IdxApp(_, s) => ok &= s.is_standard(),
            TermKind::NatCase { ret, .. } => ok &= ret.is_standard(),
            _ => {}
        });
        ok
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match &self.kind {
            TermKind::Var(_) | TermKind::RealLit(_) | TermKind::NatLit(_) | TermKind::Prim(_) => {}
            TermKind::Succ(e)
            | TermKind::Proj(_, e)
            | TermKind::IdxApp(e, _)
            | TermKind::IdxLam { body: e, .. }
            | TermKind::Fix { body: e, .. }
            | TermKind::Lam { body: e, .. } => e.visit(f),
            TermKind::App(a, b)
            | TermKind::WithPair(a, b)
            | TermKind::TensorPair(a, b)
            | TermKind::LetPair {
                bound: a, body: b, ..
            } => {
                a.visit(f);
                b.visit(f);
            }
            TermKind::NatCase {
                scrutinee,
                zero,
                succ,
                ..
            } => {
                scrutinee.visit(f);
                zero.visit(f);
                succ.visit(f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> SensExpr {
        SensExpr::var(n)
    }

    #[test]
    fn kinds_of_examples() {
        let env = IdxEnv::from_pairs(&[("i", Kind::Size), ("r", Kind::Sens)]);
        assert_eq!(kind_check(&env, &SensExpr::plus(v("i"), SensExpr::one())), Ok(Kind::Size));
        assert_eq!(kind_check(&env, &SensExpr::times(v("r"), v("i"))), Ok(Kind::Sens));
        assert_eq!(
            kind_check(&IdxEnv::new(), &v("i")),
            Err(KindError::Unbound("i".into()))
        );
        assert!(check_kind(&env, &SensExpr::ratio(1, 2), Kind::Size).is_err());
    }

    #[test]
    fn case_scrutinee_must_be_size() {
        let env = IdxEnv::from_pairs(&[("r", Kind::Sens)]);
        let c = SensExpr::case(v("r"), SensExpr::one(), "j", v("j"));
        assert!(matches!(kind_check(&env, &c), Err(KindError::ExpectedSize(_))));
    }

    #[test]
    fn subst_examples() {
        let sq = SensExpr::times(v("i"), v("i"));
        assert_eq!(sq.subst("i", &SensExpr::num(3)), SensExpr::times(SensExpr::num(3), SensExpr::num(3)));

        let s = SensExpr::sup("i", Kind::Sens, SensExpr::plus(v("i"), v("j")));
        let got = s.subst("j", &v("i"));
        let want = SensExpr::sup("i'", Kind::Sens, SensExpr::plus(v("i'"), v("i")));
        assert_eq!(got, want);

        let c = SensExpr::case(v("S"), v("j"), "k", v("k"));
        assert_eq!(
            c.subst("j", &SensExpr::num(5)),
            SensExpr::case(v("S"), SensExpr::num(5), "k", v("k"))
        );
    }

    #[test]
    fn free_vars_examples() {
        assert_eq!(SensExpr::max(SensExpr::num(2), v("r")).free_vars(), ["r".to_string()].into());
        let s = SensExpr::sup("i", Kind::Size, SensExpr::times(v("i"), v("j")));
        assert_eq!(s.free_vars(), ["j".to_string()].into());
        assert!(SensExpr::num(7).free_vars().is_empty());
    }

    #[test]
    fn alpha_equivalence() {
        let a = SensExpr::sup("i", Kind::Sens, v("i"));
        let b = SensExpr::sup("k", Kind::Sens, v("k"));
        assert!(a.alpha_eq(&b));
        let c = SensExpr::sup("k", Kind::Sens, v("i"));
        assert!(!a.alpha_eq(&c));
    }

    #[test]
    fn fresh_names_skip_avoided() {
        let avoid: BTreeSet<String> = ["i".into(), "i'".into()].into();
        assert_eq!(fresh_name("i", |n| avoid.contains(n)), "i'2");
        assert_eq!(fresh_name("j", |n| avoid.contains(n)), "j");
    }

    #[test]
    fn folding_keeps_zero_times() {
        let e = mk_times(SensExpr::zero(), v("r"));
        assert_eq!(e, SensExpr::times(SensExpr::zero(), v("r")));
        assert_eq!(mk_times(SensExpr::inf(), SensExpr::zero()), SensExpr::inf());
        assert_eq!(mk_plus(SensExpr::num(1), SensExpr::num(1)), SensExpr::num(2));
    }

    #[test]
    fn type_subst_avoids_capture() {
        let t = Type::forall("i", Kind::Size, Type::NatSingleton(SensExpr::plus(v("i"), v("j"))));
        let got = t.subst("j", &v("i"));
        let want = Type::forall("i'", Kind::Size, Type::NatSingleton(SensExpr::plus(v("i'"), v("i"))));
        assert_eq!(got, want);
    }
}
