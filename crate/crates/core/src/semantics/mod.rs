//! Denotations of index terms and the environment algebra.
//!
//! `Sup` is evaluated over a finite probe set, so [`eval_sens`] is a lower
//! bound of the true supremum and is exact on monotone bodies. It serves as a
//! test oracle; verdicts never rest on it.

mod env;

use std::collections::BTreeMap;
use std::fmt;

pub use crate::ext_real::ExtReal;
pub use env::{box_elim, box_erase, ectx, env_add, env_join, env_scale, Annotation, EnvError, JoinOp, VarEnv};

use crate::ast::{Kind, Refinement, RefinementSet, SensExpr};

/// Which interpretation a valuation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValuationMode {
    /// Sizes are naturals, sensitivities range over `[0, ∞]`.
    Standard,
    /// Every variable ranges over `[0, ∞]`.
    Uniform,
}

/// An assignment of index variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    pub values: BTreeMap<String, ExtReal>,
    pub mode: ValuationMode,
}

impl Valuation {
    pub fn standard() -> Self {
        Valuation {
            values: BTreeMap::new(),
            mode: ValuationMode::Standard,
        }
    }

    pub fn uniform() -> Self {
        Valuation {
            values: BTreeMap::new(),
            mode: ValuationMode::Uniform,
        }
    }

    pub fn with(mut self, name: &str, v: ExtReal) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn set(&mut self, name: &str, v: ExtReal) {
        self.values.insert(name.to_string(), v);
    }

    pub fn get(&self, name: &str) -> Option<&ExtReal> {
        self.values.get(name)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Probe points used to approximate `Sup`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeConfig {
    pub sens: Vec<ExtReal>,
    pub size: Vec<ExtReal>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        let sens = vec![
            ExtReal::zero(),
            ExtReal::from_ratio(1, 2),
            ExtReal::one(),
            ExtReal::from_int(2),
            ExtReal::from_int(5),
            ExtReal::from_int(10),
            ExtReal::from_int(1000),
            ExtReal::Infinity,
        ];
        let mut size: Vec<ExtReal> = (0..=16).map(ExtReal::from_int).collect();
        size.push(ExtReal::Infinity);
        ProbeConfig { sens, size }
    }
}

impl ProbeConfig {
    /// Probe points for a binder of kind `k` under `mode`.
    pub fn points(&self, k: Kind, mode: ValuationMode) -> Vec<ExtReal> {
        match (mode, k) {
            (ValuationMode::Standard, Kind::Size) => self.size.clone(),
            (ValuationMode::Standard, Kind::Sens) => self.sens.clone(),
            (ValuationMode::Uniform, _) => {
                let mut v: Vec<ExtReal> = self.sens.iter().chain(self.size.iter()).cloned().collect();
                v.sort();
                v.dedup();
                v
            }
        }
    }
}

/// The standard interpretation ⟦s⟧ρ.
///
/// Panics if a free variable of `s` is missing from `rho`.
pub fn eval_sens(s: &SensExpr, rho: &Valuation, probes: &ProbeConfig) -> ExtReal {
    let mut env = rho.clone();
    eval(s, &mut env, probes, ValuationMode::Standard)
}

/// The uniform interpretation ⟦s⟧ᵁρ.
pub fn eval_sens_uniform(s: &SensExpr, rho: &Valuation, probes: &ProbeConfig) -> ExtReal {
    let mut env = rho.clone();
    eval(s, &mut env, probes, ValuationMode::Uniform)
}

/// Dispatches on `mode`.
pub fn eval_in(s: &SensExpr, rho: &Valuation, probes: &ProbeConfig, mode: ValuationMode) -> ExtReal {
    let mut env = rho.clone();
    eval(s, &mut env, probes, mode)
}

fn with_binding<T>(env: &mut Valuation, name: &str, v: ExtReal, f: impl FnOnce(&mut Valuation) -> T) -> T {
    let old = env.values.insert(name.to_string(), v);
    let r = f(env);
    match old {
        Some(o) => {
            env.values.insert(name.to_string(), o);
        }
        None => {
            env.values.remove(name);
        }
    }
    r
}

fn eval(s: &SensExpr, env: &mut Valuation, probes: &ProbeConfig, mode: ValuationMode) -> ExtReal {
    match s {
        SensExpr::Const(c) => c.clone(),
        SensExpr::Var(v) => env
            .values
            .get(v)
            .cloned()
            .unwrap_or_else(|| panic!("index variable `{v}` has no value")),
        SensExpr::Plus(a, b) => eval(a, env, probes, mode) + eval(b, env, probes, mode),
        SensExpr::Times(a, b) => eval(a, env, probes, mode) * eval(b, env, probes, mode),
        SensExpr::Max(a, b) => eval(a, env, probes, mode).max(eval(b, env, probes, mode)),
        SensExpr::Sup { binder, kind, body } => {
            let mut best = ExtReal::zero();
            for p in probes.points(*kind, mode) {
                let v = with_binding(env, binder, p, |env| eval(body, env, probes, mode));
                best = best.max(v);
                if best.is_infinite() {
                    break;
                }
            }
            best
        }
        SensExpr::Case {
            scrutinee,
            zero,
            binder,
            succ,
        } => {
            let v = eval(scrutinee, env, probes, mode);
            if v.is_zero() {
                return eval(zero, env, probes, mode);
            }
            // Below one only the uniform reading applies; standard
            // valuations give naturals here.
            if v < ExtReal::one() {
                return ExtReal::zero();
            }
            let pred = v.pred();
            with_binding(env, binder, pred, |env| eval(succ, env, probes, mode))
        }
    }
}

/// Whether `rho` satisfies a refinement.
pub fn eval_refinement(r: &Refinement, rho: &Valuation, probes: &ProbeConfig, mode: ValuationMode) -> bool {
    match r {
        Refinement::IsZero(s) => eval_in(s, rho, probes, mode).is_zero(),
        Refinement::IsSucc(s, b) => {
            let lhs = eval_in(s, rho, probes, mode);
            match rho.get(b) {
                Some(bv) => lhs == bv + &ExtReal::one(),
                None => panic!("index variable `{b}` has no value"),
            }
        }
    }
}

pub fn eval_refinements(rs: &RefinementSet, rho: &Valuation, probes: &ProbeConfig, mode: ValuationMode) -> bool {
    rs.iter().all(|r| eval_refinement(r, rho, probes, mode))
}
