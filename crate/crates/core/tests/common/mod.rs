//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use senscheck::ast::{Kind, Loc, SensExpr, Term, TermKind, Type};
use senscheck::constraints::{Arith, CmpOp, Formula, Sort};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every corpus file, sorted by name.
pub fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "dfz"))
        .collect();
    v.sort();
    v
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).expect("corpus file")
}

pub fn z3_available() -> bool {
    std::process::Command::new("z3").arg("-version").output().is_ok()
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

// ---------------------------------------------------------------------------
// Random index terms

/// Shape of generated terms.
#[derive(Clone, Debug)]
pub struct TermGen {
    pub vars: Vec<(String, Kind)>,
    /// Allow `max`, `sup` and `scase`.
    pub extended: bool,
    pub allow_sup: bool,
    pub allow_infinity: bool,
}

impl TermGen {
    pub fn gen(&self, rng: &mut ChaCha8Rng, depth: u32) -> SensExpr {
        let mut bound = Vec::new();
        self.go(rng, depth, &mut bound)
    }

    fn leaf(&self, rng: &mut ChaCha8Rng, bound: &[(String, Kind)]) -> SensExpr {
        let vars: Vec<&(String, Kind)> = self.vars.iter().chain(bound.iter()).collect();
        if !vars.is_empty() && rng.gen_bool(0.5) {
            return SensExpr::var(&vars.choose(rng).expect("non-empty").0);
        }
        match rng.gen_range(0..10) {
            0 if self.allow_infinity => SensExpr::inf(),
            0..=2 => SensExpr::ratio(rng.gen_range(0..5), 2),
            _ => SensExpr::num(rng.gen_range(0..4)),
        }
    }

    fn go(&self, rng: &mut ChaCha8Rng, depth: u32, bound: &mut Vec<(String, Kind)>) -> SensExpr {
        if depth == 0 || rng.gen_bool(0.25) {
            return self.leaf(rng, bound);
        }
        let choices = if self.extended { 5 } else { 2 };
        match rng.gen_range(0..choices) {
            0 => SensExpr::plus(self.go(rng, depth - 1, bound), self.go(rng, depth - 1, bound)),
            1 => SensExpr::times(self.go(rng, depth - 1, bound), self.go(rng, depth - 1, bound)),
            2 => SensExpr::max(self.go(rng, depth - 1, bound), self.go(rng, depth - 1, bound)),
            3 if self.allow_sup => {
                let name = format!("b{}", bound.len());
                let kind = if rng.gen_bool(0.5) { Kind::Size } else { Kind::Sens };
                bound.push((name.clone(), kind));
                let body = self.go(rng, depth - 1, bound);
                bound.pop();
                SensExpr::sup(&name, kind, body)
            }
            _ => {
                let scrutinee = self.size_term(rng, depth - 1, bound);
                let zero = self.go(rng, depth - 1, bound);
                let name = format!("b{}", bound.len());
                bound.push((name.clone(), Kind::Size));
                let succ = self.go(rng, depth - 1, bound);
                bound.pop();
                SensExpr::case(scrutinee, zero, &name, succ)
            }
        }
    }

    /// A term of kind size: naturals, size variables, sums and products.
    fn size_term(&self, rng: &mut ChaCha8Rng, depth: u32, bound: &[(String, Kind)]) -> SensExpr {
        let sizes: Vec<&String> = self
            .vars
            .iter()
            .chain(bound.iter())
            .filter(|(_, k)| *k == Kind::Size)
            .map(|(n, _)| n)
            .collect();
        if depth == 0 || rng.gen_bool(0.5) {
            if !sizes.is_empty() && rng.gen_bool(0.6) {
                return SensExpr::var(sizes.choose(rng).expect("non-empty"));
            }
            return SensExpr::num(rng.gen_range(0..4));
        }
        let a = self.size_term(rng, depth - 1, bound);
        let b = self.size_term(rng, depth - 1, bound);
        if rng.gen_bool(0.5) {
            SensExpr::plus(a, b)
        } else {
            SensExpr::times(a, b)
        }
    }
}

// ---------------------------------------------------------------------------
// Exact oracle for closed, `sup`-free, `∞`-free terms

/// Value of `s` under `env`, computed directly over the rationals.
pub fn oracle_value(s: &SensExpr, env: &BTreeMap<String, BigRational>) -> BigRational {
    match s {
        SensExpr::Const(c) => c.as_finite().expect("finite constant").clone(),
        SensExpr::Var(v) => env.get(v).unwrap_or_else(|| panic!("unbound {v}")).clone(),
        SensExpr::Plus(a, b) => oracle_value(a, env) + oracle_value(b, env),
        SensExpr::Times(a, b) => oracle_value(a, env) * oracle_value(b, env),
        SensExpr::Max(a, b) => oracle_value(a, env).max(oracle_value(b, env)),
        SensExpr::Sup { .. } => panic!("sup is outside the oracle's fragment"),
        SensExpr::Case {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            let v = oracle_value(scrutinee, env);
            if v.is_zero() {
                oracle_value(zero, env)
            } else {
                let mut env = env.clone();
                env.insert(binder.clone(), v - BigRational::one());
                oracle_value(succ, &env)
            }
        }
    }
}

/// Values of every subterm of `s` as evaluated in context, together with
/// each value minus one and zero.
pub fn candidate_values(s: &SensExpr) -> Vec<BigRational> {
    fn walk(s: &SensExpr, env: &BTreeMap<String, BigRational>, out: &mut BTreeSet<BigRational>) {
        let v = oracle_value(s, env);
        out.insert(v.clone() - BigRational::one());
        out.insert(v);
        match s {
            SensExpr::Const(_) | SensExpr::Var(_) | SensExpr::Sup { .. } => {}
            SensExpr::Plus(a, b) | SensExpr::Times(a, b) | SensExpr::Max(a, b) => {
                walk(a, env, out);
                walk(b, env, out);
            }
            SensExpr::Case {
                scrutinee,
                zero,
                binder,
                succ,
            } => {
                walk(scrutinee, env, out);
                walk(zero, env, out);
                let sv = oracle_value(scrutinee, env);
                if !sv.is_zero() {
                    let mut env = env.clone();
                    env.insert(binder.clone(), sv - BigRational::one());
                    walk(succ, &env, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    out.insert(BigRational::zero());
    walk(s, &BTreeMap::new(), &mut out);
    out.into_iter().filter(|v| !v.is_negative()).collect()
}

/// Decides formulas whose quantified variables only need values from a
/// fixed candidate set. Sub-results are memoized on the values of their
/// free variables.
pub struct FiniteModelChecker<'a> {
    candidates: &'a [BigRational],
    free: HashMap<usize, Vec<String>>,
    memo: HashMap<(usize, Vec<BigRational>), bool>,
}

impl<'a> FiniteModelChecker<'a> {
    pub fn new(candidates: &'a [BigRational]) -> Self {
        FiniteModelChecker {
            candidates,
            free: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn arith(a: &Arith, env: &BTreeMap<String, BigRational>) -> BigRational {
        match a {
            Arith::Var(v) => env.get(v).unwrap_or_else(|| panic!("unassigned {v}")).clone(),
            Arith::Const(q) => q.clone(),
            Arith::Add(x, y) => Self::arith(x, env) + Self::arith(y, env),
            Arith::Mul(x, y) => Self::arith(x, env) * Self::arith(y, env),
        }
    }

    fn values_for(&self, sort: Sort) -> Vec<BigRational> {
        self.candidates
            .iter()
            .filter(|v| sort != Sort::Nat || v.is_integer())
            .cloned()
            .collect()
    }

    pub fn holds(&mut self, f: &Formula, env: &BTreeMap<String, BigRational>) -> bool {
        let key_ptr = f as *const Formula as usize;
        let free = self
            .free
            .entry(key_ptr)
            .or_insert_with(|| f.free_vars().into_iter().collect())
            .clone();
        let key = (key_ptr, free.iter().map(|v| env[v].clone()).collect::<Vec<_>>());
        if let Some(&b) = self.memo.get(&key) {
            return b;
        }
        let b = match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(op, l, r) => {
                let (l, r) = (Self::arith(l, env), Self::arith(r, env));
                match op {
                    CmpOp::Ge => l >= r,
                    CmpOp::Le => l <= r,
                    CmpOp::Eq => l == r,
                    CmpOp::Gt => l > r,
                    CmpOp::Lt => l < r,
                }
            }
            Formula::And(ps) => ps.iter().all(|p| self.holds(p, env)),
            Formula::Or(ps) => ps.iter().any(|p| self.holds(p, env)),
            Formula::Implies(a, b) => !self.holds(a, env) || self.holds(b, env),
            Formula::Not(a) => !self.holds(a, env),
            Formula::Exists(v, sort, body) => self.values_for(*sort).into_iter().any(|c| {
                let mut env = env.clone();
                env.insert(v.clone(), c);
                self.holds(body, &env)
            }),
            Formula::ForAll(v, sort, body) => self.values_for(*sort).into_iter().all(|c| {
                let mut env = env.clone();
                env.insert(v.clone(), c);
                self.holds(body, &env)
            }),
        };
        self.memo.insert(key, b);
        b
    }
}

// ---------------------------------------------------------------------------
// Floating-point search for counterexamples to polynomial obligations

/// Monomials `(coefficient, exponents)` of a polynomial index term, with
/// exponents listed in the order of `vars`.
pub fn expand(s: &SensExpr, vars: &[(String, Kind)]) -> Vec<(f64, Vec<u32>)> {
    let n = vars.len();
    match s {
        SensExpr::Const(c) => vec![(c.to_f64(), vec![0; n])],
        SensExpr::Var(v) => {
            let mut e = vec![0; n];
            e[vars.iter().position(|(x, _)| x == v).expect("declared variable")] = 1;
            vec![(1.0, e)]
        }
        SensExpr::Plus(a, b) => {
            let mut out = expand(a, vars);
            out.extend(expand(b, vars));
            out
        }
        SensExpr::Times(a, b) => {
            let (xa, xb) = (expand(a, vars), expand(b, vars));
            let mut out = Vec::new();
            for (ca, ea) in &xa {
                for (cb, eb) in &xb {
                    out.push((ca * cb, ea.iter().zip(eb).map(|(p, q)| p + q).collect()));
                }
            }
            out
        }
        _ => panic!("polynomial expected"),
    }
}

/// Relative slack of the floating-point search.
pub const REL_TOL: f64 = 1e-9;

/// Fifty nonnegative reals, dense near zero and one.
pub fn real_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..20).map(|k| k as f64 / 20.0).collect();
    g.extend((0..20).map(|k| 1.0 + k as f64 * 0.25));
    g.extend([6.0, 7.5, 10.0, 12.0, 16.0, 20.0, 25.0, 32.0, 50.0, 100.0]);
    g
}

/// Searches naturals up to 32 for size variables and [`real_grid`] for
/// sensitivity variables. Returns the first point with `lhs < rhs`.
pub fn exhaustive_counterexample(vars: &[(String, Kind)], lhs: &SensExpr, rhs: &SensExpr) -> Option<Vec<f64>> {
    // lhs - rhs as one list of signed monomials.
    let mut diff = expand(lhs, vars);
    diff.extend(expand(rhs, vars).into_iter().map(|(c, e)| (-c, e)));
    let scale: Vec<(f64, Vec<u32>)> = diff.iter().map(|(c, e)| (c.abs(), e.clone())).collect();
    let grid = real_grid();
    let nats: Vec<f64> = (0..=32).map(f64::from).collect();
    let axes: Vec<&[f64]> = vars
        .iter()
        .map(|(_, k)| if *k == Kind::Size { nats.as_slice() } else { grid.as_slice() })
        .collect();
    let eval = |m: &[(f64, Vec<u32>)], point: &[f64]| -> f64 {
        m.iter()
            .map(|(c, e)| c * e.iter().zip(point).map(|(&k, x)| x.powi(k as i32)).product::<f64>())
            .sum()
    };
    let mut idx = vec![0usize; vars.len()];
    let mut point = vec![0.0; vars.len()];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            point[k] = axes[k][i];
        }
        let d = eval(&diff, &point);
        if d < -REL_TOL * eval(&scale, &point).max(1.0) {
            return Some(point);
        }
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            return None;
        }
    }
}

/// A random polynomial of total degree at most `degree` with small
/// nonnegative integer coefficients.
pub fn random_poly(rng: &mut ChaCha8Rng, vars: &[(String, Kind)], degree: u32) -> SensExpr {
    let terms = rng.gen_range(1..=4);
    let mut acc: Option<SensExpr> = None;
    for _ in 0..terms {
        let deg = rng.gen_range(0..=degree);
        let mut mono = SensExpr::num(rng.gen_range(1..=4));
        for _ in 0..deg {
            let (v, _) = vars.choose(rng).expect("variables");
            mono = SensExpr::times(mono, SensExpr::var(v));
        }
        acc = Some(match acc {
            None => mono,
            Some(a) => SensExpr::plus(a, mono),
        });
    }
    acc.expect("at least one term")
}


// ---------------------------------------------------------------------------
// Random types and terms

/// Names used by [`gen_term`]; none is a keyword or primitive.
pub const TERM_VARS: [&str; 4] = ["x", "y", "z", "w"];
pub const PRIM: &str = "p";

fn gen_index(rng: &mut ChaCha8Rng, idx: &[String], depth: u32) -> SensExpr {
    let gen = TermGen {
        vars: idx.iter().map(|n| (n.clone(), Kind::Size)).collect(),
        extended: false,
        allow_sup: false,
        allow_infinity: false,
    };
    gen.gen(rng, depth.min(2))
}

pub fn gen_type(rng: &mut ChaCha8Rng, idx: &mut Vec<String>, depth: u32) -> Type {
    if depth == 0 {
        return match rng.gen_range(0..3) {
            0 => Type::Real,
            1 => Type::RealSingleton(gen_index(rng, idx, 1)),
            _ => Type::NatSingleton(gen_index(rng, idx, 1)),
        };
    }
    match rng.gen_range(0..6) {
        0 => Type::Real,
        1 => Type::NatSingleton(gen_index(rng, idx, 2)),
        2 => Type::lollipop(
            gen_index(rng, idx, 2),
            gen_type(rng, idx, depth - 1),
            gen_type(rng, idx, depth - 1),
        ),
        3 => {
            let binder = format!("i{}", idx.len());
            idx.push(binder.clone());
            let body = gen_type(rng, idx, depth - 1);
            idx.pop();
            Type::forall(&binder, Kind::Size, body)
        }
        4 => Type::tensor(gen_type(rng, idx, depth - 1), gen_type(rng, idx, depth - 1)),
        _ => Type::with(gen_type(rng, idx, depth - 1), gen_type(rng, idx, depth - 1)),
    }
}

/// A syntactically valid, well-scoped term. Binders are distinct from each
/// other and from [`PRIM`].
pub fn gen_term(rng: &mut ChaCha8Rng, depth: u32) -> Term {
    let mut fresh = 0usize;
    let mut scope: Vec<String> = Vec::new();
    let mut idx: Vec<String> = Vec::new();
    term_go(rng, depth, &mut scope, &mut idx, &mut fresh)
}

fn mk(kind: TermKind) -> Term {
    Term::new(kind, Loc::default())
}

fn next_name(prefix: &str, fresh: &mut usize) -> String {
    *fresh += 1;
    format!("{prefix}{fresh}")
}

fn term_go(rng: &mut ChaCha8Rng, depth: u32, scope: &mut Vec<String>, idx: &mut Vec<String>, fresh: &mut usize) -> Term {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..4) {
            0 if !scope.is_empty() => mk(TermKind::Var(scope.choose(rng).expect("non-empty").clone())),
            1 => mk(TermKind::NatLit(rng.gen_range(0..5))),
            2 => mk(TermKind::RealLit(rat(rng.gen_range(-9..10), rng.gen_range(1..4)))),
            _ => mk(TermKind::Prim(PRIM.to_string())),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..12) {
        0 => {
            let x = next_name("x", fresh);
            let ann = gen_index(rng, idx, 2);
            let ty = gen_type(rng, idx, 1);
            scope.push(x.clone());
            let body = term_go(rng, d, scope, idx, fresh);
            scope.pop();
            mk(TermKind::Lam {
                name: x,
                ann,
                ty,
                body: Box::new(body),
            })
        }
        1 | 2 => mk(TermKind::App(
            Box::new(term_go(rng, d, scope, idx, fresh)),
            Box::new(term_go(rng, d, scope, idx, fresh)),
        )),
        3 => {
            let f = next_name("f", fresh);
            let ann = gen_type(rng, idx, 2);
            scope.push(f.clone());
            let body = term_go(rng, d, scope, idx, fresh);
            scope.pop();
            mk(TermKind::Fix {
                name: f,
                ann,
                body: Box::new(body),
            })
        }
        4 => {
            let i = next_name("i", fresh);
            idx.push(i.clone());
            let body = term_go(rng, d, scope, idx, fresh);
            idx.pop();
            mk(TermKind::IdxLam {
                binder: i,
                kind: Kind::Size,
                body: Box::new(body),
            })
        }
        5 => {
            let e = term_go(rng, d, scope, idx, fresh);
            mk(TermKind::IdxApp(Box::new(e), gen_index(rng, idx, 2)))
        }
        6 => mk(TermKind::WithPair(
            Box::new(term_go(rng, d, scope, idx, fresh)),
            Box::new(term_go(rng, d, scope, idx, fresh)),
        )),
        7 => mk(TermKind::Proj(rng.gen_range(1..=2), Box::new(term_go(rng, d, scope, idx, fresh)))),
        8 => mk(TermKind::TensorPair(
            Box::new(term_go(rng, d, scope, idx, fresh)),
            Box::new(term_go(rng, d, scope, idx, fresh)),
        )),
        9 => {
            let (l, r) = (next_name("a", fresh), next_name("b", fresh));
            let bound = term_go(rng, d, scope, idx, fresh);
            scope.push(l.clone());
            scope.push(r.clone());
            let body = term_go(rng, d, scope, idx, fresh);
            scope.truncate(scope.len() - 2);
            mk(TermKind::LetPair {
                left: l,
                right: r,
                bound: Box::new(bound),
                body: Box::new(body),
            })
        }
        10 => mk(TermKind::Succ(Box::new(term_go(rng, d, scope, idx, fresh)))),
        _ => {
            let scrutinee = term_go(rng, d, scope, idx, fresh);
            let ret = gen_type(rng, idx, 1);
            let zero = term_go(rng, d, scope, idx, fresh);
            let (m, j) = (next_name("m", fresh), next_name("j", fresh));
            scope.push(m.clone());
            idx.push(j.clone());
            let succ = term_go(rng, d, scope, idx, fresh);
            scope.pop();
            idx.pop();
            mk(TermKind::NatCase {
                scrutinee: Box::new(scrutinee),
                ret,
                zero: Box::new(zero),
                pred_var: m,
                pred_idx: j,
                succ: Box::new(succ),
            })
        }
    }
}

/// The same term with every location reset.
pub fn erase_locs(t: &Term) -> Term {
    let b = |t: &Term| Box::new(erase_locs(t));
    let kind = match &t.kind {
        TermKind::Succ(a) => TermKind::Succ(b(a)),
        TermKind::Fix { name, ann, body } => TermKind::Fix {
            name: name.clone(),
            ann: ann.clone(),
            body: b(body),
        },
        TermKind::Lam { name, ann, ty, body } => TermKind::Lam {
            name: name.clone(),
            ann: ann.clone(),
            ty: ty.clone(),
            body: b(body),
        },
        TermKind::App(f, a) => TermKind::App(b(f), b(a)),
        TermKind::IdxLam { binder, kind, body } => TermKind::IdxLam {
            binder: binder.clone(),
            kind: *kind,
            body: b(body),
        },
        TermKind::IdxApp(e, s) => TermKind::IdxApp(b(e), s.clone()),
        TermKind::WithPair(x, y) => TermKind::WithPair(b(x), b(y)),
        TermKind::Proj(k, e) => TermKind::Proj(*k, b(e)),
        TermKind::TensorPair(x, y) => TermKind::TensorPair(b(x), b(y)),
        TermKind::LetPair {
            left,
            right,
            bound,
            body,
        } => TermKind::LetPair {
            left: left.clone(),
            right: right.clone(),
            bound: b(bound),
            body: b(body),
        },
        TermKind::NatCase {
            scrutinee,
            ret,
            zero,
            pred_var,
            pred_idx,
            succ,
        } => TermKind::NatCase {
            scrutinee: b(scrutinee),
            ret: ret.clone(),
            zero: b(zero),
            pred_var: pred_var.clone(),
            pred_idx: pred_idx.clone(),
            succ: b(succ),
        },
        k => k.clone(),
    };
    Term::new(kind, Loc::default())
}
