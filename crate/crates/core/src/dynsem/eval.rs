use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Signed;
use thiserror::Error;

use crate::ast::{Term, TermKind};
use crate::ext_real::fmt_rational;

pub type Env = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(BigRational),
    Nat(u64),
    Pair(Box<Value>, Box<Value>),
    With(Box<Value>, Box<Value>),
    Closure { env: Env, param: String, body: Term },
    IdxClosure { env: Env, body: Term },
    /// `fix`, unrolled again at every use.
    Rec { env: Env, name: String, body: Term },
    Prim { name: String, args: Vec<Value> },
}

impl Value {
    pub fn real(n: i64) -> Value {
        Value::Real(BigRational::from_integer(n.into()))
    }

    pub fn as_real(&self) -> Option<&BigRational> {
        match self {
            Value::Real(q) => Some(q),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(q) => f.write_str(&fmt_rational(q)),
            Value::Nat(n) => write!(f, "{n}"),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::With(a, b) => write!(f, "<{a}, {b}>"),
            Value::Closure { param, .. } => write!(f, "<fun {param}>"),
            Value::IdxClosure { .. } => f.write_str("<idxlam>"),
            Value::Rec { name, .. } => write!(f, "<fix {name}>"),
            Value::Prim { name, args } => write!(f, "<{name}/{}>", args.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation ran out of fuel")]
    OutOfFuel,
    #[error("stuck: {0}")]
    Stuck(String),
    #[error("no definition for primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("evaluation nested deeper than {MAX_DEPTH} calls")]
    TooDeep,
}

/// Nesting limit for [`eval_term`].
pub const MAX_DEPTH: usize = 20_000;

const EVAL_STACK: usize = 512 << 20;

thread_local! {
    static DEPTH: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

struct DepthGuard;

impl DepthGuard {
    fn enter() -> Result<DepthGuard, EvalError> {
        DEPTH.with(|d| {
            if d.get() >= MAX_DEPTH {
                Err(EvalError::TooDeep)
            } else {
                d.set(d.get() + 1);
                Ok(DepthGuard)
            }
        })
    }
}

impl Drop for DepthGuard {
    fn drop(&mut self) {
        DEPTH.with(|d| d.set(d.get() - 1));
    }
}

/// Runs `f` on a thread whose stack can hold [`MAX_DEPTH`] nested
/// evaluation frames.
pub fn with_eval_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(EVAL_STACK)
            .spawn_scoped(s, f)
            .expect("spawn evaluation thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}

pub type PrimFn = fn(&[Value]) -> Result<Value, EvalError>;

/// Executable definitions for primitives, keyed by name.
#[derive(Clone, Debug, Default)]
pub struct PrimRegistry {
    defs: BTreeMap<String, (usize, PrimFn)>,
}

fn real_arg(v: &Value, prim: &str) -> Result<BigRational, EvalError> {
    v.as_real()
        .cloned()
        .ok_or_else(|| EvalError::Stuck(format!("`{prim}` expects a real, got {v}")))
}

fn nat_arg(v: &Value, prim: &str) -> Result<u64, EvalError> {
    match v {
        Value::Nat(n) => Ok(*n),
        _ => Err(EvalError::Stuck(format!("`{prim}` expects a natural, got {v}"))),
    }
}

impl PrimRegistry {
    pub fn new() -> Self {
        PrimRegistry::default()
    }

    pub fn register(&mut self, name: &str, arity: usize, f: PrimFn) {
        self.defs.insert(name.to_string(), (arity, f));
    }

    pub fn get(&self, name: &str) -> Option<(usize, PrimFn)> {
        self.defs.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }

    /// Arithmetic used by the bundled examples.
    ///
    /// | name | arity | meaning |
    /// |------|-------|---------|
    /// | `add`, `plus` | 2 | `x + y` |
    /// | `sub` | 2 | `x - y` |
    /// | `neg` | 1 | `-x` |
    /// | `abs` | 1 | `|x|` |
    /// | `half` | 1 | `x / 2` |
    /// | `clip` | 1 | `x` clamped to `[-1, 1]` |
    /// | `max2`, `min2` | 2 | larger or smaller argument |
    /// | `scale`, `use` | 2 | `n * x` for a natural `n` |
    pub fn standard() -> Self {
        let mut r = PrimRegistry::new();
        fn add(a: &[Value]) -> Result<Value, EvalError> {
            Ok(Value::Real(real_arg(&a[0], "add")? + real_arg(&a[1], "add")?))
        }
        fn sub(a: &[Value]) -> Result<Value, EvalError> {
            Ok(Value::Real(real_arg(&a[0], "sub")? - real_arg(&a[1], "sub")?))
        }
        fn scale(a: &[Value]) -> Result<Value, EvalError> {
            let n = nat_arg(&a[0], "scale")?;
            Ok(Value::Real(BigRational::from_integer(n.into()) * real_arg(&a[1], "scale")?))
        }
        r.register("add", 2, add);
        r.register("plus", 2, add);
        r.register("sub", 2, sub);
        r.register("neg", 1, |a| Ok(Value::Real(-real_arg(&a[0], "neg")?)));
        r.register("abs", 1, |a| Ok(Value::Real(real_arg(&a[0], "abs")?.abs())));
        r.register("half", 1, |a| {
            Ok(Value::Real(real_arg(&a[0], "half")? / BigRational::from_integer(2.into())))
        });
        r.register("clip", 1, |a| {
            let x = real_arg(&a[0], "clip")?;
            let one = BigRational::from_integer(1.into());
            Ok(Value::Real(x.clamp(-one.clone(), one)))
        });
        r.register("max2", 2, |a| {
            Ok(Value::Real(real_arg(&a[0], "max2")?.max(real_arg(&a[1], "max2")?)))
        });
        r.register("min2", 2, |a| {
            Ok(Value::Real(real_arg(&a[0], "min2")?.min(real_arg(&a[1], "min2")?)))
        });
        r.register("scale", 2, scale);
        r.register("use", 2, scale);
        r
    }
}

/// Call-by-value evaluation. Each evaluation step consumes one unit of
/// `fuel`; index abstractions and applications are erased. Deep
/// recursion needs a large stack, see [`with_eval_stack`].
pub fn eval_term(e: &Term, env: &Env, prims: &PrimRegistry, fuel: &mut u64) -> Result<Value, EvalError> {
    if *fuel == 0 {
        return Err(EvalError::OutOfFuel);
    }
    *fuel -= 1;
    let _guard = DepthGuard::enter()?;
    match &e.kind {
        TermKind::Var(x) => match env.get(x) {
            Some(Value::Rec { env: renv, name, body }) => unroll(renv, name, body, prims, fuel),
            Some(v) => Ok(v.clone()),
            None => Err(EvalError::Stuck(format!("unbound variable `{x}`"))),
        },
        TermKind::RealLit(q) => Ok(Value::Real(q.clone())),
        TermKind::NatLit(n) => Ok(Value::Nat(*n)),
        TermKind::Succ(a) => match eval_term(a, env, prims, fuel)? {
            Value::Nat(n) => Ok(Value::Nat(n + 1)),
            v => Err(EvalError::Stuck(format!("succ of {v}"))),
        },
        TermKind::Fix { name, body, .. } => unroll(env, name, body, prims, fuel),
        TermKind::Lam { name, body, .. } => Ok(Value::Closure {
            env: env.clone(),
            param: name.clone(),
            body: (**body).clone(),
        }),
        TermKind::App(f, a) => {
            let fv = eval_term(f, env, prims, fuel)?;
            let av = eval_term(a, env, prims, fuel)?;
            apply(fv, av, prims, fuel)
        }
        TermKind::IdxLam { body, .. } => Ok(Value::IdxClosure {
            env: env.clone(),
            body: (**body).clone(),
        }),
        TermKind::IdxApp(f, _) => match eval_term(f, env, prims, fuel)? {
            Value::IdxClosure { env, body } => eval_term(&body, &env, prims, fuel),
            v @ Value::Prim { .. } => Ok(v),
            v => Err(EvalError::Stuck(format!("index application of {v}"))),
        },
        TermKind::WithPair(a, b) => Ok(Value::With(
            Box::new(eval_term(a, env, prims, fuel)?),
            Box::new(eval_term(b, env, prims, fuel)?),
        )),
        TermKind::Proj(k, a) => match eval_term(a, env, prims, fuel)? {
            Value::With(l, r) => Ok(if *k == 1 { *l } else { *r }),
            v => Err(EvalError::Stuck(format!("projection of {v}"))),
        },
        TermKind::TensorPair(a, b) => Ok(Value::Pair(
            Box::new(eval_term(a, env, prims, fuel)?),
            Box::new(eval_term(b, env, prims, fuel)?),
        )),
        TermKind::LetPair {
            left,
            right,
            bound,
            body,
        } => match eval_term(bound, env, prims, fuel)? {
            Value::Pair(l, r) => {
                let mut env = env.clone();
                env.insert(left.clone(), *l);
                env.insert(right.clone(), *r);
                eval_term(body, &env, prims, fuel)
            }
            v => Err(EvalError::Stuck(format!("let-pair of {v}"))),
        },
        TermKind::NatCase {
            scrutinee,
            zero,
            pred_var,
            succ,
            ..
        } => match eval_term(scrutinee, env, prims, fuel)? {
            Value::Nat(0) => eval_term(zero, env, prims, fuel),
            Value::Nat(n) => {
                let mut env = env.clone();
                env.insert(pred_var.clone(), Value::Nat(n - 1));
                eval_term(succ, &env, prims, fuel)
            }
            v => Err(EvalError::Stuck(format!("case on {v}"))),
        },
        TermKind::Prim(name) => match prims.get(name) {
            Some((0, f)) => f(&[]),
            Some(_) => Ok(Value::Prim {
                name: name.clone(),
                args: Vec::new(),
            }),
            None => Err(EvalError::UnknownPrimitive(name.clone())),
        },
    }
}

fn unroll(env: &Env, name: &str, body: &Term, prims: &PrimRegistry, fuel: &mut u64) -> Result<Value, EvalError> {
    let mut inner = env.clone();
    inner.insert(
        name.to_string(),
        Value::Rec {
            env: env.clone(),
            name: name.to_string(),
            body: body.clone(),
        },
    );
    eval_term(body, &inner, prims, fuel)
}

/// Applies a function value to an argument.
pub fn apply(f: Value, arg: Value, prims: &PrimRegistry, fuel: &mut u64) -> Result<Value, EvalError> {
    match f {
        Value::Closure { mut env, param, body } => {
            env.insert(param, arg);
            eval_term(&body, &env, prims, fuel)
        }
        Value::Prim { name, mut args } => {
            let (arity, def) = prims.get(&name).ok_or_else(|| EvalError::UnknownPrimitive(name.clone()))?;
            args.push(arg);
            if args.len() == arity {
                def(&args)
            } else {
                Ok(Value::Prim { name, args })
            }
        }
        v => Err(EvalError::Stuck(format!("application of {v}"))),
    }
}

/// Evaluates a closed term with the standard primitives.
pub fn eval_closed(e: &Term, fuel: u64) -> Result<Value, EvalError> {
    with_eval_stack(|| {
        let mut fuel = fuel;
        eval_term(e, &Env::new(), &PrimRegistry::standard(), &mut fuel)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn run(src: &str) -> Value {
        let prims = PrimRegistry::standard();
        let names: Vec<&str> = prims.names().collect();
        let t = parse_term(src, &names).unwrap();
        eval_closed(&t, 100_000).unwrap()
    }

    fn q(n: i64, d: i64) -> Value {
        Value::Real(BigRational::new(n.into(), d.into()))
    }

    #[test]
    fn scaling_by_three() {
        assert_eq!(run("(fun (x :[3] real) { plus x (plus x x) }) 2.0"), Value::real(6));
    }

    #[test]
    fn case_on_zero() {
        assert_eq!(run("case 0 return real of 0 => 1.0 | m[j] + 1 => 2.0"), Value::real(1));
        assert_eq!(run("case 3 return nat[2] of 0 => 0 | m[j] + 1 => m"), Value::Nat(2));
    }

    #[test]
    fn recursive_multiplication() {
        let src = "(fix (mul : forall i : size . ![0] nat[i] -o ![i] real -o real) {
            idxlam (i : size) { fun (n :[0] nat[i]) { fun (x :[i] real) {
              case n return real of 0 => 0.0 | m[j] + 1 => plus x (mul[j] m x) } } } })[4] 4 1.5";
        assert_eq!(run(src), q(6, 1));
    }

    #[test]
    fn fuel_runs_out() {
        let prims = PrimRegistry::standard();
        let t = parse_term("(fix (f : ![1] real -o real) { fun (x :[1] real) { f x } }) 1.0", &[]).unwrap();
        let run = |fuel: u64| {
            with_eval_stack(|| {
                let mut fuel = fuel;
                eval_term(&t, &Env::new(), &prims, &mut fuel)
            })
        };
        assert_eq!(run(500), Err(EvalError::OutOfFuel));
        assert_eq!(run(u64::MAX), Err(EvalError::TooDeep));
    }

    #[test]
    fn pairs_and_projections() {
        assert_eq!(run("pi2 <1.0, 2.5>"), q(5, 2));
        assert_eq!(run("let (a, b) = (1.0, 2.0) in sub b a"), Value::real(1));
        assert_eq!(run("clip (neg 3.0)"), Value::real(-1));
    }
}
