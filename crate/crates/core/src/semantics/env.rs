use std::fmt;

use thiserror::Error;

use crate::ast::{mk_case, mk_max, mk_plus, mk_sup, mk_times, Kind, SensExpr, Type};
use crate::syntax::{pretty_sens, pretty_type};

/// An environment annotation: a sensitivity, or `Box` when no use was recorded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Annotation {
    Box,
    Sens(SensExpr),
}

impl Annotation {
    pub fn is_box(&self) -> bool {
        matches!(self, Annotation::Box)
    }

    pub fn as_sens(&self) -> Option<&SensExpr> {
        match self {
            Annotation::Box => None,
            Annotation::Sens(s) => Some(s),
        }
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Annotation::Box => f.write_str("□"),
            Annotation::Sens(s) => f.write_str(&pretty_sens(s)),
        }
    }
}

/// An ordered typing environment with pairwise distinct names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarEnv {
    entries: Vec<(String, Annotation, Type)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("variable `{name}` is bound at two different types: {left} and {right}")]
    SharedBindingTypeMismatch { name: String, left: String, right: String },
    #[error("environments have different domains: {{{left}}} and {{{right}}}")]
    DomainMismatch { left: String, right: String },
}

impl VarEnv {
    pub fn new() -> Self {
        VarEnv::default()
    }

    /// Skeleton from names and types, every annotation `Box`.
    pub fn skeleton(bindings: &[(&str, Type)]) -> Self {
        let mut env = VarEnv::new();
        for (n, t) in bindings {
            env.push(n, Annotation::Box, t.clone());
        }
        env
    }

    /// Panics if `name` is already bound.
    pub fn push(&mut self, name: &str, ann: Annotation, ty: Type) {
        assert!(!self.contains(name), "duplicate binding `{name}`");
        self.entries.push((name.to_string(), ann, ty));
    }

    pub fn extended(&self, name: &str, ann: Annotation, ty: Type) -> VarEnv {
        let mut e = self.clone();
        e.push(name, ann, ty);
        e
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Option<(&Annotation, &Type)> {
        self.entries.iter().find(|(n, _, _)| n == name).map(|(_, a, t)| (a, t))
    }

    pub fn annotation(&self, name: &str) -> Option<&Annotation> {
        self.get(name).map(|(a, _)| a)
    }

    pub fn set_annotation(&mut self, name: &str, ann: Annotation) {
        match self.entries.iter_mut().find(|(n, _, _)| n == name) {
            Some(entry) => entry.1 = ann,
            None => panic!("no binding `{name}`"),
        }
    }

    /// Removes `name`, returning its annotation and type.
    pub fn remove(&mut self, name: &str) -> Option<(Annotation, Type)> {
        let pos = self.entries.iter().position(|(n, _, _)| n == name)?;
        let (_, a, t) = self.entries.remove(pos);
        Some((a, t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Annotation, &Type)> {
        self.entries.iter().map(|(n, a, t)| (n.as_str(), a, t))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn all_box(&self) -> bool {
        self.entries.iter().all(|(_, a, _)| a.is_box())
    }

    pub fn same_domain(&self, other: &VarEnv) -> bool {
        self.len() == other.len() && self.entries.iter().all(|(n, _, _)| other.contains(n))
    }

    pub fn map_annotations(&self, f: impl Fn(&Annotation) -> Annotation) -> VarEnv {
        VarEnv {
            entries: self.entries.iter().map(|(n, a, t)| (n.clone(), f(a), t.clone())).collect(),
        }
    }

    fn domain_string(&self) -> String {
        self.names().join(", ")
    }
}

impl fmt::Display for VarEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(n, a, t)| format!("{n} :[{a}] {}", pretty_type(t)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// ⌈·⌉
pub fn box_elim(a: &Annotation) -> SensExpr {
    match a {
        Annotation::Box => SensExpr::zero(),
        Annotation::Sens(s) => s.clone(),
    }
}

/// Drops every `Box` binding.
pub fn box_erase(env: &VarEnv) -> VarEnv {
    VarEnv {
        entries: env.entries.iter().filter(|(_, a, _)| !a.is_box()).cloned().collect(),
    }
}

/// The all-`Box` copy of a skeleton.
pub fn ectx(skeleton: &VarEnv) -> VarEnv {
    skeleton.map_annotations(|_| Annotation::Box)
}

fn check_types(name: &str, a: &Type, b: &Type) -> Result<(), EnvError> {
    if a.alpha_eq(b) {
        Ok(())
    } else {
        Err(EnvError::SharedBindingTypeMismatch {
            name: name.to_string(),
            left: pretty_type(a),
            right: pretty_type(b),
        })
    }
}

fn add_ann(a: &Annotation, b: &Annotation) -> Annotation {
    match (a, b) {
        (Annotation::Box, x) | (x, Annotation::Box) => x.clone(),
        (Annotation::Sens(r), Annotation::Sens(s)) => Annotation::Sens(mk_plus(r.clone(), s.clone())),
    }
}

/// Γ₁ + Γ₂ over the union of the domains.
pub fn env_add(g1: &VarEnv, g2: &VarEnv) -> Result<VarEnv, EnvError> {
    let mut out = g1.clone();
    for (n, a, t) in &g2.entries {
        match out.entries.iter_mut().find(|(m, _, _)| m == n) {
            Some(entry) => {
                check_types(n, &entry.2, t)?;
                entry.1 = add_ann(&entry.1, a);
            }
            None => out.entries.push((n.clone(), a.clone(), t.clone())),
        }
    }
    Ok(out)
}

/// R·Γ
pub fn env_scale(r: &SensExpr, env: &VarEnv) -> VarEnv {
    env.map_annotations(|a| match a {
        Annotation::Box => Annotation::Box,
        Annotation::Sens(s) => Annotation::Sens(mk_times(r.clone(), s.clone())),
    })
}

/// Pointwise operator for [`env_join`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JoinOp {
    Max,
    Sup { binder: String, kind: Kind },
    Case { scrutinee: SensExpr, binder: String },
}

/// Pointwise extended operation. `Max` and `Case` take two environments,
/// `Sup` takes one.
pub fn env_join(op: &JoinOp, envs: &[&VarEnv]) -> Result<VarEnv, EnvError> {
    match op {
        JoinOp::Sup { binder, kind } => {
            assert_eq!(envs.len(), 1, "sup joins one environment");
            Ok(envs[0].map_annotations(|a| match a {
                Annotation::Box => Annotation::Box,
                Annotation::Sens(s) => Annotation::Sens(mk_sup(binder, *kind, s.clone())),
            }))
        }
        JoinOp::Max | JoinOp::Case { .. } => {
            assert_eq!(envs.len(), 2, "binary join");
            let (l, r) = (envs[0], envs[1]);
            if !l.same_domain(r) {
                return Err(EnvError::DomainMismatch {
                    left: l.domain_string(),
                    right: r.domain_string(),
                });
            }
            let mut out = VarEnv::new();
            for (n, a, t) in &l.entries {
                let (b, u) = r.get(n).expect("same domain");
                check_types(n, t, u)?;
                let joined = match op {
                    JoinOp::Max => match (a, b) {
                        (Annotation::Box, x) | (x, Annotation::Box) => x.clone(),
                        (Annotation::Sens(p), Annotation::Sens(q)) => Annotation::Sens(mk_max(p.clone(), q.clone())),
                    },
                    JoinOp::Case { scrutinee, binder } => {
                        if a.is_box() && b.is_box() {
                            Annotation::Box
                        } else {
                            Annotation::Sens(mk_case(scrutinee.clone(), box_elim(a), binder, box_elim(b)))
                        }
                    }
                    JoinOp::Sup { .. } => unreachable!(),
                };
                out.entries.push((n.clone(), joined, t.clone()));
            }
            Ok(out)
        }
    }
}
