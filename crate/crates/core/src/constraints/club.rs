use std::collections::BTreeSet;
use std::fmt;

use crate::ast::{fresh_name, IdxEnv, Kind, Refinement, RefinementSet, SensExpr};
use crate::semantics::{eval_in, eval_refinements, ExtReal, ProbeConfig, Valuation, ValuationMode};
use crate::syntax::pretty_sens;
use crate::typing::pretty_refinement;

/// A club expression: standard leaves combined by `+`, `·` and clubs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClubExpr {
    Leaf(SensExpr),
    Plus(Box<ClubExpr>, Box<ClubExpr>),
    Times(Box<ClubExpr>, Box<ClubExpr>),
    Club(Vec<ClubEntry>),
}

/// `(φᵢ; Φᵢ; body)`: the body counts towards the maximum for every valuation
/// of the local variables `φᵢ` satisfying `Φᵢ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClubEntry {
    pub env: IdxEnv,
    pub refinements: RefinementSet,
    pub body: ClubExpr,
}

impl ClubEntry {
    pub fn new(env: IdxEnv, refinements: RefinementSet, body: ClubExpr) -> Self {
        ClubEntry { env, refinements, body }
    }

    fn rename_local(&self, old: &str, new: &str) -> ClubEntry {
        let pairs: Vec<(String, Kind)> = self
            .env
            .iter()
            .map(|(n, k)| (if n == old { new.to_string() } else { n.to_string() }, k))
            .collect();
        let mut env = IdxEnv::new();
        for (n, k) in pairs {
            env.push(&n, k);
        }
        ClubEntry {
            env,
            refinements: self.refinements.rename(old, new),
            body: self.body.rename_free(old, new),
        }
    }
}

impl ClubExpr {
    pub fn leaf(s: SensExpr) -> Self {
        ClubExpr::Leaf(s)
    }

    pub fn plus(a: ClubExpr, b: ClubExpr) -> Self {
        ClubExpr::Plus(Box::new(a), Box::new(b))
    }

    pub fn times(a: ClubExpr, b: ClubExpr) -> Self {
        ClubExpr::Times(Box::new(a), Box::new(b))
    }

    /// Number of `Club` nodes.
    pub fn club_count(&self) -> usize {
        match self {
            ClubExpr::Leaf(_) => 0,
            ClubExpr::Plus(a, b) | ClubExpr::Times(a, b) => a.club_count() + b.club_count(),
            ClubExpr::Club(es) => 1 + es.iter().map(|e| e.body.club_count()).sum::<usize>(),
        }
    }

    /// A single club whose entry bodies are all leaves.
    pub fn is_normal(&self) -> bool {
        self.normal_entries().is_some()
    }

    /// The entries of a normal form as `(φᵢ, Φᵢ, Rᵢ)`.
    pub fn normal_entries(&self) -> Option<Vec<(&IdxEnv, &RefinementSet, &SensExpr)>> {
        match self {
            ClubExpr::Club(es) => es
                .iter()
                .map(|e| match &e.body {
                    ClubExpr::Leaf(s) => Some((&e.env, &e.refinements, s)),
                    _ => None,
                })
                .collect(),
            _ => None,
        }
    }

    /// Every name occurring anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            ClubExpr::Leaf(s) => s.all_names(out),
            ClubExpr::Plus(a, b) | ClubExpr::Times(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            ClubExpr::Club(es) => {
                for e in es {
                    out.extend(e.env.names());
                    out.extend(e.refinements.free_vars());
                    e.body.all_names(out);
                }
            }
        }
    }

    /// Renames free occurrences of `old`. Local binders never shadow outer
    /// names here, so no capture check is needed.
    pub fn rename_free(&self, old: &str, new: &str) -> ClubExpr {
        match self {
            ClubExpr::Leaf(s) => ClubExpr::Leaf(s.rename_free(old, new)),
            ClubExpr::Plus(a, b) => ClubExpr::plus(a.rename_free(old, new), b.rename_free(old, new)),
            ClubExpr::Times(a, b) => ClubExpr::times(a.rename_free(old, new), b.rename_free(old, new)),
            ClubExpr::Club(es) => ClubExpr::Club(
                es.iter()
                    .map(|e| {
                        if e.env.contains(old) {
                            e.clone()
                        } else {
                            ClubEntry {
                                env: e.env.clone(),
                                refinements: e.refinements.rename(old, new),
                                body: e.body.rename_free(old, new),
                            }
                        }
                    })
                    .collect(),
            ),
        }
    }
}

impl fmt::Display for ClubExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClubExpr::Leaf(s) => f.write_str(&pretty_sens(s)),
            ClubExpr::Plus(a, b) => write!(f, "({a} + {b})"),
            ClubExpr::Times(a, b) => write!(f, "({a} * {b})"),
            ClubExpr::Club(es) => {
                f.write_str("club{")?;
                for (k, e) in es.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    let vars: Vec<String> = e.env.iter().map(|(n, _)| n.to_string()).collect();
                    let refs: Vec<String> = e.refinements.iter().map(pretty_refinement).collect();
                    write!(f, "({}; {}; {})", vars.join(" "), refs.join(" /\\ "), e.body)?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Renames every `Sup` and `Case` binder in `s` so that binders are pairwise
/// distinct and distinct from `avoid` and from the free variables of `s`.
pub fn uniquify_binders(s: &SensExpr, avoid: &BTreeSet<String>) -> SensExpr {
    let mut all = BTreeSet::new();
    s.all_names(&mut all);
    let mut taken: BTreeSet<String> = avoid.iter().cloned().chain(s.free_vars()).collect();
    uniquify(s, &all, &mut taken)
}

fn uniquify(s: &SensExpr, all: &BTreeSet<String>, taken: &mut BTreeSet<String>) -> SensExpr {
    let pick = |b: &str, taken: &mut BTreeSet<String>| {
        let n = fresh_name(b, |c| taken.contains(c) || (c != b && all.contains(c)));
        taken.insert(n.clone());
        n
    };
    match s {
        SensExpr::Const(_) | SensExpr::Var(_) => s.clone(),
        SensExpr::Plus(a, b) => SensExpr::plus(uniquify(a, all, taken), uniquify(b, all, taken)),
        SensExpr::Times(a, b) => SensExpr::times(uniquify(a, all, taken), uniquify(b, all, taken)),
        SensExpr::Max(a, b) => SensExpr::max(uniquify(a, all, taken), uniquify(b, all, taken)),
        SensExpr::Sup { binder, kind, body } => {
            let n = pick(binder, taken);
            let body = uniquify(&body.rename_free(binder, &n), all, taken);
            SensExpr::sup(&n, *kind, body)
        }
        SensExpr::Case {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            let scrutinee = uniquify(scrutinee, all, taken);
            let zero = uniquify(zero, all, taken);
            let n = pick(binder, taken);
            let succ = uniquify(&succ.rename_free(binder, &n), all, taken);
            SensExpr::case(scrutinee, zero, &n, succ)
        }
    }
}

/// The translation `C(·)`. Binders of `s` should already be unique; see
/// [`club_of`].
pub fn to_club(s: &SensExpr) -> ClubExpr {
    match s {
        SensExpr::Const(_) | SensExpr::Var(_) => ClubExpr::Leaf(s.clone()),
        SensExpr::Plus(a, b) => ClubExpr::plus(to_club(a), to_club(b)),
        SensExpr::Times(a, b) => ClubExpr::times(to_club(a), to_club(b)),
        SensExpr::Max(a, b) => ClubExpr::Club(vec![
            ClubEntry::new(IdxEnv::new(), RefinementSet::new(), to_club(a)),
            ClubEntry::new(IdxEnv::new(), RefinementSet::new(), to_club(b)),
        ]),
        SensExpr::Sup { binder, kind, body } => ClubExpr::Club(vec![ClubEntry::new(
            IdxEnv::from_pairs(&[(binder, *kind)]),
            RefinementSet::new(),
            to_club(body),
        )]),
        SensExpr::Case {
            scrutinee,
            zero,
            binder,
            succ,
        } => ClubExpr::Club(vec![
            ClubEntry::new(
                IdxEnv::new(),
                RefinementSet::new().with(Refinement::IsZero((**scrutinee).clone())),
                to_club(zero),
            ),
            ClubEntry::new(
                IdxEnv::from_pairs(&[(binder, Kind::Size)]),
                RefinementSet::new().with(Refinement::IsSucc((**scrutinee).clone(), binder.clone())),
                to_club(succ),
            ),
        ]),
    }
}

/// `C(s)` after renaming binders apart from `outer`.
pub fn club_of(s: &SensExpr, outer: &BTreeSet<String>) -> ClubExpr {
    to_club(&uniquify_binders(s, outer))
}

/// Probe-based evaluation ⦇q⦈ρ. Local variables fixed by a refinement
/// `S = i + 1` are solved for; the others range over the probe points.
pub fn eval_club(q: &ClubExpr, rho: &Valuation, probes: &ProbeConfig, mode: ValuationMode) -> ExtReal {
    match q {
        ClubExpr::Leaf(s) => eval_in(s, rho, probes, mode),
        ClubExpr::Plus(a, b) => eval_club(a, rho, probes, mode) + eval_club(b, rho, probes, mode),
        ClubExpr::Times(a, b) => eval_club(a, rho, probes, mode) * eval_club(b, rho, probes, mode),
        ClubExpr::Club(es) => {
            let mut best = ExtReal::zero();
            for e in es {
                let mut vars: Vec<(String, Kind)> = e.env.iter().map(|(n, k)| (n.to_string(), k)).collect();
                let mut rho = rho.clone();
                entry_max(e, &mut vars, &mut rho, probes, mode, &mut best);
                if best.is_infinite() {
                    break;
                }
            }
            best
        }
    }
}

fn entry_max(
    e: &ClubEntry,
    pending: &mut Vec<(String, Kind)>,
    rho: &mut Valuation,
    probes: &ProbeConfig,
    mode: ValuationMode,
    best: &mut ExtReal,
) {
    if pending.is_empty() {
        if eval_refinements(&e.refinements, rho, probes, mode) {
            let v = eval_club(&e.body, rho, probes, mode);
            *best = best.clone().max(v);
        }
        return;
    }
    let solvable = e.refinements.iter().find_map(|r| match r {
        Refinement::IsSucc(s, b) => {
            let k = pending.iter().position(|(n, _)| n == b)?;
            let fv = s.free_vars();
            if fv.iter().any(|v| pending.iter().any(|(n, _)| n == v)) {
                return None;
            }
            Some((k, s.clone()))
        }
        Refinement::IsZero(_) => None,
    });
    if let Some((k, s)) = solvable {
        let (name, _) = pending.remove(k);
        let v = eval_in(&s, rho, probes, mode);
        if v >= ExtReal::one() {
            let old = rho.values.insert(name.clone(), v.pred());
            entry_max(e, pending, rho, probes, mode, best);
            restore(rho, &name, old);
        }
        pending.insert(k, (name, Kind::Size));
        return;
    }
    let (name, kind) = pending.remove(0);
    for p in probes.points(kind, mode) {
        let old = rho.values.insert(name.clone(), p);
        entry_max(e, pending, rho, probes, mode, best);
        restore(rho, &name, old);
        if best.is_infinite() {
            break;
        }
    }
    pending.insert(0, (name, kind));
}

fn restore(rho: &mut Valuation, name: &str, old: Option<ExtReal>) {
    match old {
        Some(o) => {
            rho.values.insert(name.to_string(), o);
        }
        None => {
            rho.values.remove(name);
        }
    }
}

/// Rewrite rules of the normalizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// `club{(φ;Φ;club{(φᵢ;Φᵢ;Rᵢ)}), V} ↦ club{(φ∪φᵢ;Φ∧Φᵢ;Rᵢ), V}`
    Flat,
    /// `club{Vᵢ} + club{Wⱼ} ↦ club{Vᵢ + Wⱼ}` over all pairs.
    CPlus,
    /// `club{Vᵢ} · club{Wⱼ} ↦ club{Vᵢ · Wⱼ}` over all pairs.
    CMult,
    /// A leaf combined with a club moves into every entry.
    Push,
    /// Two leaves combine into one.
    Fold,
}

impl Rule {
    /// Rules that remove a `Club` node.
    pub fn merges(self) -> bool {
        matches!(self, Rule::Flat | Rule::CPlus | Rule::CMult)
    }
}

#[derive(Clone, Copy)]
enum Op {
    Plus,
    Times,
}

impl Op {
    fn leaf(self, a: SensExpr, b: SensExpr) -> SensExpr {
        match self {
            Op::Plus => SensExpr::plus(a, b),
            Op::Times => SensExpr::times(a, b),
        }
    }

    fn club(self, a: ClubExpr, b: ClubExpr) -> ClubExpr {
        match self {
            Op::Plus => ClubExpr::plus(a, b),
            Op::Times => ClubExpr::times(a, b),
        }
    }

    fn rule(self) -> Rule {
        match self {
            Op::Plus => Rule::CPlus,
            Op::Times => Rule::CMult,
        }
    }
}

/// Moves standard factors and addends into the entries of the clubs they
/// are applied to, bottom-up, until none remains outside.
pub fn push_leaves(q: &ClubExpr) -> ClubExpr {
    match q {
        ClubExpr::Leaf(_) => q.clone(),
        ClubExpr::Plus(a, b) => push_pair(Op::Plus, push_leaves(a), push_leaves(b)),
        ClubExpr::Times(a, b) => push_pair(Op::Times, push_leaves(a), push_leaves(b)),
        ClubExpr::Club(es) => ClubExpr::Club(
            es.iter()
                .map(|e| ClubEntry::new(e.env.clone(), e.refinements.clone(), push_leaves(&e.body)))
                .collect(),
        ),
    }
}

fn push_pair(op: Op, a: ClubExpr, b: ClubExpr) -> ClubExpr {
    match (a, b) {
        (ClubExpr::Leaf(x), ClubExpr::Leaf(y)) => ClubExpr::Leaf(op.leaf(x, y)),
        (ClubExpr::Leaf(x), ClubExpr::Club(es)) => ClubExpr::Club(
            es.into_iter()
                .map(|e| ClubEntry::new(e.env, e.refinements, push_pair(op, ClubExpr::Leaf(x.clone()), e.body)))
                .collect(),
        ),
        (ClubExpr::Club(es), ClubExpr::Leaf(y)) => ClubExpr::Club(
            es.into_iter()
                .map(|e| ClubEntry::new(e.env, e.refinements, push_pair(op, e.body, ClubExpr::Leaf(y.clone()))))
                .collect(),
        ),
        (a, b) => op.club(a, b),
    }
}

/// One leftmost-innermost rewrite step, or `None` at a normal form. Names in
/// `outer` are never reused for renamed locals.
pub fn step(q: &ClubExpr, outer: &BTreeSet<String>) -> Option<(ClubExpr, Rule)> {
    let mut taken = outer.clone();
    q.all_names(&mut taken);
    step_in(q, &mut taken)
}

fn step_in(q: &ClubExpr, taken: &mut BTreeSet<String>) -> Option<(ClubExpr, Rule)> {
    match q {
        ClubExpr::Leaf(_) => None,
        ClubExpr::Plus(a, b) => step_binary(Op::Plus, a, b, taken),
        ClubExpr::Times(a, b) => step_binary(Op::Times, a, b, taken),
        ClubExpr::Club(es) => {
            for (k, e) in es.iter().enumerate() {
                if let Some((body, rule)) = step_in(&e.body, taken) {
                    let mut es = es.clone();
                    es[k].body = body;
                    return Some((ClubExpr::Club(es), rule));
                }
            }
            let k = es.iter().position(|e| matches!(e.body, ClubExpr::Club(_)))?;
            let mut out = Vec::new();
            for (m, e) in es.iter().enumerate() {
                if m != k {
                    out.push(e.clone());
                    continue;
                }
                let ClubExpr::Club(inner) = &e.body else { unreachable!() };
                for f in inner {
                    out.push(ClubEntry::new(
                        e.env.concat(&f.env),
                        e.refinements.and(&f.refinements),
                        f.body.clone(),
                    ));
                }
            }
            Some((ClubExpr::Club(disjoint(out, taken)), Rule::Flat))
        }
    }
}

fn step_binary(op: Op, a: &ClubExpr, b: &ClubExpr, taken: &mut BTreeSet<String>) -> Option<(ClubExpr, Rule)> {
    if let Some((a2, r)) = step_in(a, taken) {
        return Some((op.club(a2, b.clone()), r));
    }
    if let Some((b2, r)) = step_in(b, taken) {
        return Some((op.club(a.clone(), b2), r));
    }
    match (a, b) {
        (ClubExpr::Leaf(x), ClubExpr::Leaf(y)) => Some((ClubExpr::Leaf(op.leaf(x.clone(), y.clone())), Rule::Fold)),
        (ClubExpr::Leaf(x), ClubExpr::Club(es)) => Some((
            ClubExpr::Club(
                es.iter()
                    .map(|e| ClubEntry::new(e.env.clone(), e.refinements.clone(), op.club(ClubExpr::Leaf(x.clone()), e.body.clone())))
                    .collect(),
            ),
            Rule::Push,
        )),
        (ClubExpr::Club(es), ClubExpr::Leaf(y)) => Some((
            ClubExpr::Club(
                es.iter()
                    .map(|e| ClubEntry::new(e.env.clone(), e.refinements.clone(), op.club(e.body.clone(), ClubExpr::Leaf(y.clone()))))
                    .collect(),
            ),
            Rule::Push,
        )),
        (ClubExpr::Club(es), ClubExpr::Club(fs)) => {
            let mut out = Vec::new();
            for e in es {
                for f in fs {
                    out.push(ClubEntry::new(
                        e.env.concat(&f.env),
                        e.refinements.and(&f.refinements),
                        op.club(e.body.clone(), f.body.clone()),
                    ));
                }
            }
            Some((ClubExpr::Club(disjoint(out, taken)), op.rule()))
        }
        _ => None,
    }
}

/// Renames locals so that no two entries share one. Earlier entries keep
/// their names.
fn disjoint(entries: Vec<ClubEntry>, taken: &mut BTreeSet<String>) -> Vec<ClubEntry> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(entries.len());
    for mut e in entries {
        let names: Vec<String> = e.env.iter().map(|(n, _)| n.to_string()).collect();
        for n in names {
            if seen.contains(&n) {
                let new = fresh_name(&n, |c| taken.contains(c));
                taken.insert(new.clone());
                e = e.rename_local(&n, &new);
                seen.insert(new);
            } else {
                seen.insert(n);
            }
        }
        out.push(e);
    }
    out
}

/// A normalization run: the normal form and each intermediate expression
/// with the rule that produced it.
#[derive(Clone, Debug)]
pub struct Normalization {
    pub result: ClubExpr,
    pub trace: Vec<(Rule, ClubExpr)>,
    pub merges: usize,
}

/// Rewrites `q` to a single club with leaf bodies, recording every step.
pub fn normalize_traced(q: &ClubExpr, outer: &BTreeSet<String>) -> Normalization {
    let bound = q.club_count();
    let mut cur = q.clone();
    let mut trace = Vec::new();
    let mut merges = 0;
    while let Some((next, rule)) = step(&cur, outer) {
        if rule.merges() {
            merges += 1;
            assert!(merges <= bound, "club normalization exceeded {bound} merge steps");
        }
        trace.push((rule, next.clone()));
        cur = next;
    }
    if let ClubExpr::Leaf(s) = cur {
        cur = ClubExpr::Club(vec![ClubEntry::new(IdxEnv::new(), RefinementSet::new(), ClubExpr::Leaf(s))]);
    }
    Normalization {
        result: cur,
        trace,
        merges,
    }
}

pub fn normalize_club(q: &ClubExpr) -> ClubExpr {
    normalize_traced(q, &BTreeSet::new()).result
}
