use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{apply, eval_term, with_eval_stack, Env, EvalError, PrimRegistry, Value};
use crate::ast::{fold, SensExpr, Term, TermKind, Type};
use crate::semantics::{eval_sens, ExtReal, ProbeConfig, Valuation};

/// Slack allowed above the bound.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub trials: usize,
    /// Largest observed `|f x - f x'| / |x - x'|`.
    pub max_ratio: BigRational,
    pub bound: ExtReal,
    pub pass: bool,
}

impl LipschitzReport {
    pub fn max_ratio_f64(&self) -> f64 {
        ExtReal::Finite(self.max_ratio.clone()).to_f64()
    }
}

fn sample_point(rng: &mut ChaCha8Rng) -> BigRational {
    let den: i64 = rng.gen_range(1..=64);
    let num: i64 = rng.gen_range(-100 * den..=100 * den);
    BigRational::new(num.into(), den.into())
}

/// Samples `trials` pairs of distinct points in `[-100, 100]` and checks
/// that `f` never stretches their distance by more than `bound`.
pub fn lipschitz_test(
    f: &Term,
    bound: &SensExpr,
    trials: usize,
    seed: u64,
    prims: &PrimRegistry,
    fuel: u64,
) -> Result<LipschitzReport, EvalError> {
    let bound = eval_sens(bound, &Valuation::standard(), &ProbeConfig::default());
    let max_ratio = with_eval_stack(|| max_ratio(f, trials, seed, prims, fuel))?;
    let pass = match &bound {
        ExtReal::Infinity => true,
        ExtReal::Finite(b) => {
            let slack = BigRational::new(1.into(), 1_000_000_000.into());
            max_ratio <= b + slack
        }
    };
    Ok(LipschitzReport {
        trials,
        max_ratio,
        bound,
        pass,
    })
}

fn max_ratio(f: &Term, trials: usize, seed: u64, prims: &PrimRegistry, fuel: u64) -> Result<BigRational, EvalError> {
    let mut budget = fuel;
    let fv = eval_term(f, &Env::new(), prims, &mut budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = BigRational::zero();
    for _ in 0..trials {
        let x = sample_point(&mut rng);
        let mut y = sample_point(&mut rng);
        while y == x {
            y = sample_point(&mut rng);
        }
        let mut budget = fuel;
        let fx = apply(fv.clone(), Value::Real(x.clone()), prims, &mut budget)?;
        let mut budget = fuel;
        let fy = apply(fv.clone(), Value::Real(y.clone()), prims, &mut budget)?;
        let (Some(fx), Some(fy)) = (fx.as_real(), fy.as_real()) else {
            return Err(EvalError::Stuck("function did not return a real".into()));
        };
        let ratio = (fx - fy).abs() / (&x - &y).abs();
        if ratio > max_ratio {
            max_ratio = ratio;
        }
    }
    Ok(max_ratio)
}

/// Instantiates every leading index quantifier of `ty` with `n` and feeds
/// `n` to every leading `nat[S]` argument, stopping at `![R] real -o real`.
/// Returns the applied term and the closed bound `R`, or `None` when the
/// type does not reduce to that shape.
pub fn instantiate_first_order(term: &Term, ty: &Type, n: u64) -> Option<(Term, SensExpr)> {
    let mut t = term.clone();
    let mut ty = ty.clone();
    loop {
        match ty {
            Type::Forall { binder, body, .. } => {
                let v = SensExpr::num(n as i64);
                t = Term::new(TermKind::IdxApp(Box::new(t), v.clone()), term.loc);
                ty = body.subst(&binder, &v);
            }
            Type::Lollipop { ann, dom, cod } => match *dom {
                Type::NatSingleton(s) => {
                    let k = fold(&s).as_const()?.as_finite()?.to_integer().try_into().ok()?;
                    t = Term::new(
                        TermKind::App(Box::new(t), Box::new(Term::new(TermKind::NatLit(k), term.loc))),
                        term.loc,
                    );
                    ty = *cod;
                }
                Type::Real if matches!(*cod, Type::Real) => return Some((t, fold(&ann))),
                _ => return None,
            },
            _ => return None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_term, parse_type};

    fn term(src: &str) -> Term {
        let prims = PrimRegistry::standard();
        let names: Vec<&str> = prims.names().collect();
        parse_term(src, &names).unwrap()
    }

    #[test]
    fn examples() {
        let prims = PrimRegistry::standard();
        let triple = term("fun (x :[3] real) { plus x (plus x x) }");
        let r = lipschitz_test(&triple, &SensExpr::num(3), 200, 7, &prims, 10_000).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_ratio, BigRational::from_integer(3.into()));
        let id = term("fun (x :[1] real) { x }");
        assert!(lipschitz_test(&id, &SensExpr::one(), 200, 7, &prims, 10_000).unwrap().pass);
        let half = SensExpr::ratio(1, 2);
        assert!(!lipschitz_test(&id, &half, 200, 7, &prims, 10_000).unwrap().pass);
    }

    #[test]
    fn deterministic_under_seed() {
        let prims = PrimRegistry::standard();
        let f = term("fun (x :[1] real) { clip x }");
        let a = lipschitz_test(&f, &SensExpr::one(), 100, 3, &prims, 10_000).unwrap();
        let b = lipschitz_test(&f, &SensExpr::one(), 100, 3, &prims, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn instantiation() {
        let t = term("idxlam (i : size) { fun (n :[0] nat[i]) { fun (x :[i] real) { scale n x } } }");
        let ty = parse_type("forall i : size . ![0] nat[i] -o ![i] real -o real").unwrap();
        let (applied, bound) = instantiate_first_order(&t, &ty, 5).unwrap();
        assert_eq!(bound, SensExpr::num(5));
        let prims = PrimRegistry::standard();
        let r = lipschitz_test(&applied, &bound, 100, 1, &prims, 10_000).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_ratio, BigRational::from_integer(5.into()));
        assert!(instantiate_first_order(&t, &parse_type("real").unwrap(), 1).is_none());
    }
}
